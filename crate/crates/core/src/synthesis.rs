//! Per-question program synthesis: ask, parse, execute, and regenerate with
//! the error until a program runs or the budget is spent.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::agents::{Agents, AskError, BackendError};
use crate::interpreter::{execute_program, parse_program, TraceEntry};
use crate::registry::{ApiRegistry, PriorAttempt};
use crate::specialists::SpecialistSuite;

pub const PROGRAM_BUDGET: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub attempts: u32,
    /// Program text of every attempt, in order.
    pub programs: Vec<String>,
    /// Text outside the program tags in the final reply.
    pub plan: String,
    /// The `final_result` binding, when the last attempt succeeded.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    pub answer: Option<serde_json::Value>,
    /// The last error line, when no attempt succeeded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub agent_failure: bool,
    pub trace_lengths: Vec<usize>,
    pub trace: Vec<TraceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Keeps an explicit JSON null as `Some(Null)`.
fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<serde_json::Value>, D::Error> {
    serde_json::Value::deserialize(d).map(Some)
}

impl ResultRecord {
    fn new(id: &str) -> Self {
        ResultRecord {
            id: id.to_string(),
            attempts: 0,
            programs: Vec::new(),
            plan: String::new(),
            answer: None,
            error: None,
            agent_failure: false,
            trace_lengths: Vec::new(),
            trace: Vec::new(),
            wall_time_ms: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.answer.is_some()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig {
    pub budget: u32,
    /// Record wall time per item. Off by default so outputs are reproducible.
    pub timings: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            budget: PROGRAM_BUDGET,
            timings: false,
        }
    }
}

/// The backend failed mid-item. Carries the partial record.
#[derive(Debug, thiserror::Error)]
#[error("agent failure on item {}: {source}", record.id)]
pub struct SynthesisFailure {
    pub record: Box<ResultRecord>,
    #[source]
    pub source: BackendError,
}

pub fn synthesize_and_run(
    id: &str,
    question: &str,
    registry: &ApiRegistry,
    agents: &Agents<'_>,
    suite: &SpecialistSuite,
    config: &SynthesisConfig,
) -> Result<ResultRecord, SynthesisFailure> {
    let start = Instant::now();
    let mut record = ResultRecord::new(id);
    let mut prior: Option<PriorAttempt> = None;
    while record.attempts < config.budget.max(1) {
        let reply = agents.ask_program(registry, question, prior.as_ref());
        let (program_text, plan, error) = match reply {
            Ok(r) => (r.program, r.plan, None),
            Err(AskError::Unusable(e)) => (String::new(), String::new(), Some(e.to_string())),
            Err(AskError::Backend(source)) => {
                record.error = Some(format!("AgentFailure: {source}"));
                record.agent_failure = true;
                if config.timings {
                    record.wall_time_ms = Some(start.elapsed().as_millis() as u64);
                }
                return Err(SynthesisFailure {
                    record: Box::new(record),
                    source,
                });
            }
        };
        record.attempts += 1;
        record.programs.push(program_text.clone());
        record.plan = plan;
        let error = match error {
            Some(e) => {
                record.trace_lengths.push(0);
                record.trace.clear();
                e
            }
            None => match parse_program(&program_text) {
                Err(e) => {
                    record.trace_lengths.push(0);
                    record.trace.clear();
                    e.to_string()
                }
                Ok(program) => {
                    let exec = execute_program(&program, registry, suite, registry.limits());
                    record.trace_lengths.push(exec.trace.len());
                    record.trace = exec.trace.entries;
                    match exec.result {
                        Ok(v) => {
                            record.answer = Some(v.to_json());
                            record.error = None;
                            break;
                        }
                        Err(e) => e.to_string(),
                    }
                }
            },
        };
        tracing::debug!(item = id, attempt = record.attempts, "{error}");
        record.error = Some(error.clone());
        prior = Some(PriorAttempt {
            body: program_text,
            error,
        });
    }
    if config.timings {
        record.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(record)
}

/// One question bound to its scene.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub id: String,
    pub question: String,
    pub suite: SpecialistSuite,
}

/// Runs every item, preserving order. Agent failures become error records.
/// Items fan out over `jobs` threads only when the backend allows it.
pub fn run_batch(
    items: &[BatchItem],
    registry: &ApiRegistry,
    agents: &Agents<'_>,
    config: &SynthesisConfig,
    jobs: usize,
) -> Vec<ResultRecord> {
    let run = |item: &BatchItem| {
        match synthesize_and_run(&item.id, &item.question, registry, agents, &item.suite, config) {
            Ok(r) => r,
            Err(f) => {
                tracing::error!("{f}");
                *f.record
            }
        }
    };
    if jobs <= 1 || items.len() <= 1 || !agents.backend().supports_parallel() {
        return items.iter().map(run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ResultRecord>>> = Mutex::new(vec![None; items.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let record = run(item);
                slots.lock().expect("slots lock")[i] = Some(record);
            });
        }
    });
    slots
        .into_inner()
        .expect("slots lock")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
