//! The signature, implementation, and program agents.
//!
//! Each agent renders its template, sends one completion request, and parses
//! the tagged reply. A reply without the expected tags is re-requested once.
//! Retries after an execution error use a fresh prompt with the failed code
//! and its one-line error appended.

mod backend;
mod parse;
mod templates;

pub use backend::{
    read_transcript, request_digest, AgentBackend, BackendError, CompletionRequest, LiveBackend,
    LiveConfig, RecordingBackend, ReplayBackend, ScriptRule, ScriptedBackend, TranscriptEntry,
    DEFAULT_BASE_URL, DEFAULT_MODEL, DEFAULT_TEMPERATURE, ENV_API_KEY, ENV_API_KEY_FALLBACK,
    ENV_BASE_URL, ENV_MODEL,
};
pub use parse::{clean_code, find_tagged_blocks, parse_signature_pairs, parse_tagged_blocks, TagError};
pub use templates::{PromptTemplate, TemplateError, TemplateId};

use crate::registry::{
    placeholder_suite, AgentFailure, ApiRegistry, BuildReport, ImplementError, ImplementationAgent,
    PriorAttempt,
};

#[derive(Debug, thiserror::Error)]
pub enum AskError {
    /// The reply was unusable even after one re-request.
    #[error("{0}")]
    Unusable(TagError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// A program reply: the code plus the surrounding plan text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramReply {
    pub program: String,
    pub plan: String,
}

pub struct Agents<'a> {
    backend: &'a dyn AgentBackend,
    temperature: f64,
}

impl<'a> Agents<'a> {
    pub fn new(backend: &'a dyn AgentBackend, temperature: f64) -> Self {
        Agents {
            backend,
            temperature,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn backend(&self) -> &'a dyn AgentBackend {
        self.backend
    }

    fn complete(&self, template: TemplateId, prompt: &str) -> Result<String, BackendError> {
        self.backend.complete(&CompletionRequest {
            template,
            prompt,
            temperature: self.temperature,
        })
    }

    /// Sends the prompt, re-sending once if `parse` rejects the reply.
    fn ask<T>(
        &self,
        template: TemplateId,
        prompt: &str,
        parse: impl Fn(&str) -> Result<T, TagError>,
    ) -> Result<T, AskError> {
        let first = self.complete(template, prompt)?;
        match parse(&first) {
            Ok(v) => Ok(v),
            Err(e) => {
                tracing::debug!("{template} reply unusable ({e}); asking again");
                let second = self.complete(template, prompt)?;
                parse(&second).map_err(AskError::Unusable)
            }
        }
    }

    pub fn signature_prompt(&self, registry: &ApiRegistry, questions: &[String]) -> String {
        let current = registry.render_current_api();
        let questions = questions.join("\n");
        PromptTemplate::signature()
            .render(&[("current_api_signatures", &current), ("questions", &questions)])
            .expect("signature template bindings are complete")
    }

    /// Proposes new signatures for a batch of questions. Returns an empty
    /// list if the agent twice fails to produce tagged pairs.
    pub fn ask_signatures(
        &self,
        registry: &ApiRegistry,
        questions: &[String],
    ) -> Result<Vec<(String, String)>, BackendError> {
        let prompt = self.signature_prompt(registry, questions);
        match self.ask(TemplateId::Signature, &prompt, parse_signature_pairs) {
            Ok(pairs) => Ok(pairs),
            Err(AskError::Unusable(e)) => {
                tracing::warn!("signature agent gave no usable pairs: {e}");
                Ok(Vec::new())
            }
            Err(AskError::Backend(e)) => Err(e),
        }
    }

    pub fn implementation_prompt(
        &self,
        registry: &ApiRegistry,
        name: &str,
        prior: Option<&PriorAttempt>,
    ) -> String {
        let method = registry
            .method(name)
            .unwrap_or_else(|| panic!("implementation requested for unknown method {name}"));
        let predefined = registry.render_predefined();
        let generated = registry.render_generated_except(name);
        let docstring = format!("\"\"\"\n{}\n\"\"\"", method.signature.docstring);
        let signature = method.signature.def_line();
        let mut prompt = PromptTemplate::implementation(registry.profile())
            .render(&[
                ("pre_defined_signatures", &predefined),
                ("predef_signatures", &predefined),
                ("generated_signatures", &generated),
                ("docstring", &docstring),
                ("signature", &signature),
            ])
            .expect("implementation template bindings are complete");
        if let Some(p) = prior {
            prompt.push_str("\nYour previous implementation failed.\n");
            if !p.body.is_empty() {
                prompt.push_str("Previous implementation:\n");
                prompt.push_str(&p.body);
                prompt.push('\n');
            }
            prompt.push_str("Error: ");
            prompt.push_str(&p.error);
            prompt.push_str("\nFix the error and output the implementation inside <implementation></implementation>.\n");
        }
        prompt
    }

    pub fn ask_implementation(
        &self,
        registry: &ApiRegistry,
        name: &str,
        prior: Option<&PriorAttempt>,
    ) -> Result<String, AskError> {
        let prompt = self.implementation_prompt(registry, name, prior);
        self.ask(TemplateId::Implementation, &prompt, |reply| {
            let blocks = parse_tagged_blocks(reply, "implementation")?;
            Ok(clean_code(blocks.last().expect("at least one block")))
        })
    }

    pub fn program_prompt(
        &self,
        registry: &ApiRegistry,
        question: &str,
        prior: Option<&PriorAttempt>,
    ) -> String {
        let predefined = registry.render_predefined();
        let api = registry.render_implemented();
        let mut prompt = PromptTemplate::program(registry.profile())
            .render(&[
                ("pre_defined_signatures", &predefined),
                ("predef_signatures", &predefined),
                ("api", &api),
                ("question", question),
            ])
            .expect("program template bindings are complete");
        if let Some(p) = prior {
            prompt.push_str("\nYour previous program failed.\n");
            if !p.body.is_empty() {
                prompt.push_str("Previous program:\n");
                prompt.push_str(&p.body);
                prompt.push('\n');
            }
            prompt.push_str("Error: ");
            prompt.push_str(&p.error);
            prompt.push_str("\nFix the error and output the program inside <program></program>.\n");
        }
        prompt
    }

    /// Asks for a program. The last non-empty `<program>` block is used;
    /// everything outside the tags is kept as the plan.
    pub fn ask_program(
        &self,
        registry: &ApiRegistry,
        question: &str,
        prior: Option<&PriorAttempt>,
    ) -> Result<ProgramReply, AskError> {
        let prompt = self.program_prompt(registry, question, prior);
        self.ask(TemplateId::Program, &prompt, |reply| {
            let blocks = find_tagged_blocks(reply, "program")?;
            let chosen = blocks
                .iter()
                .rev()
                .find(|b| !b.payload.is_empty())
                .ok_or_else(|| TagError::MissingTag("program".into()))?;
            let mut plan = String::new();
            let mut pos = 0;
            for b in &blocks {
                plan.push_str(&reply[pos..b.start]);
                pos = b.end;
            }
            plan.push_str(&reply[pos..]);
            Ok(ProgramReply {
                program: clean_code(&chosen.payload),
                plan: plan.trim().to_string(),
            })
        })
    }
}

impl ImplementationAgent for Agents<'_> {
    fn implement(
        &mut self,
        registry: &ApiRegistry,
        name: &str,
        prior: Option<&PriorAttempt>,
    ) -> Result<String, ImplementError> {
        match self.ask_implementation(registry, name, prior) {
            Ok(body) => Ok(body),
            Err(AskError::Unusable(e)) => Err(ImplementError::Unusable(e.to_string())),
            Err(AskError::Backend(e)) => Err(ImplementError::Failure(e.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("signature agent: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Agent(#[from] AgentFailure),
}

/// Proposes signatures for the questions in batches of `batch_size`, then
/// implements every proposed method against the placeholder scene.
pub fn build_api(
    registry: &mut ApiRegistry,
    agents: &mut Agents<'_>,
    questions: &[String],
    batch_size: usize,
    max_batches: Option<usize>,
) -> Result<BuildReport, BuildError> {
    let batches = questions.chunks(batch_size.max(1));
    for (i, batch) in batches.take(max_batches.unwrap_or(usize::MAX)).enumerate() {
        let pairs = agents.ask_signatures(registry, batch)?;
        let added = registry.add_signatures(&pairs);
        tracing::info!(batch = i, accepted = ?added.accepted, "signatures");
    }
    Ok(registry.implement_all(agents, &placeholder_suite())?)
}
