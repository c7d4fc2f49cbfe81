//! Completion backends: a live chat-completions endpoint, transcript replay,
//! scripted rules for tests, and a recorder that writes transcripts.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::templates::TemplateId;

pub const ENV_BASE_URL: &str = "SPATIALSYNTH_BASE_URL";
pub const ENV_MODEL: &str = "SPATIALSYNTH_MODEL";
pub const ENV_API_KEY: &str = "SPATIALSYNTH_API_KEY";
pub const ENV_API_KEY_FALLBACK: &str = "OPENAI_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";
pub const DEFAULT_TEMPERATURE: f64 = 0.7;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("transcript exhausted after {0} entries")]
    TranscriptExhausted(usize),
    #[error("transcript entry {position} was recorded for a different request (expected digest {expected}, got {actual})")]
    DigestMismatch {
        position: usize,
        expected: String,
        actual: String,
    },
    #[error("no scripted rule matches this {0} request")]
    NoScriptedResponse(TemplateId),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub template: TemplateId,
    pub prompt: &'a str,
    pub temperature: f64,
}

impl CompletionRequest<'_> {
    pub fn digest(&self) -> String {
        request_digest(self.template, self.temperature, self.prompt)
    }
}

/// SHA-256 over the template id, temperature, and rendered prompt.
pub fn request_digest(template: TemplateId, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(template.as_str().as_bytes());
    h.update([0]);
    h.update(temperature.to_bits().to_le_bytes());
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

pub trait AgentBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError>;

    /// Whether concurrent requests are safe and order-independent.
    fn supports_parallel(&self) -> bool {
        false
    }
}

impl<T: AgentBackend + ?Sized> AgentBackend for Box<T> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        (**self).complete(request)
    }

    fn supports_parallel(&self) -> bool {
        (**self).supports_parallel()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub digest: String,
    pub response: String,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, BackendError> {
    let file_err = |message: String| BackendError::File {
        path: path.display().to_string(),
        message,
    };
    let file = File::open(path).map_err(|e| file_err(e.to_string()))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| file_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry = serde_json::from_str(&line)
            .map_err(|e| file_err(format!("line {}: {e}", i + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Serves recorded responses strictly in order, checking each digest.
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Vec<TranscriptEntry>,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        ReplayBackend {
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn open(path: &Path) -> Result<Self, BackendError> {
        Ok(ReplayBackend::new(read_transcript(path)?))
    }

    pub fn position(&self) -> usize {
        *self.cursor.lock().expect("cursor lock")
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.position()
    }
}

impl AgentBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let entry = self
            .entries
            .get(*cursor)
            .ok_or(BackendError::TranscriptExhausted(self.entries.len()))?;
        let actual = request.digest();
        if entry.digest != actual {
            return Err(BackendError::DigestMismatch {
                position: *cursor,
                expected: entry.digest.clone(),
                actual,
            });
        }
        *cursor += 1;
        Ok(entry.response.clone())
    }
}

/// A rule: every `contains` string must occur in the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateId>,
    #[serde(default)]
    pub contains: Vec<String>,
    pub responses: Vec<String>,
}

/// First matching rule wins; its responses are served in order and the
/// last one repeats.
#[derive(Debug)]
pub struct ScriptedBackend {
    rules: Vec<ScriptRule>,
    served: Mutex<Vec<usize>>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Result<Self, BackendError> {
        if let Some(i) = rules.iter().position(|r| r.responses.is_empty()) {
            return Err(BackendError::Config(format!("scripted rule {i} has no responses")));
        }
        let n = rules.len();
        Ok(ScriptedBackend {
            rules,
            served: Mutex::new(vec![0; n]),
        })
    }

    pub fn open(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let rules: Vec<ScriptRule> = serde_json::from_str(&text).map_err(|e| BackendError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ScriptedBackend::new(rules)
    }

    /// How many requests each rule has answered.
    pub fn served(&self) -> Vec<usize> {
        self.served.lock().expect("served lock").clone()
    }
}

impl AgentBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let i = self
            .rules
            .iter()
            .position(|r| {
                r.template.is_none_or(|t| t == request.template)
                    && r.contains.iter().all(|c| request.prompt.contains(c.as_str()))
            })
            .ok_or(BackendError::NoScriptedResponse(request.template))?;
        let mut served = self.served.lock().expect("served lock");
        let rule = &self.rules[i];
        let response = rule.responses[served[i].min(rule.responses.len() - 1)].clone();
        served[i] += 1;
        Ok(response)
    }
}

/// Forwards to another backend and appends each exchange to a transcript.
pub struct RecordingBackend<B> {
    inner: B,
    out: Mutex<File>,
}

impl<B: AgentBackend> RecordingBackend<B> {
    pub fn create(inner: B, path: &Path) -> Result<Self, BackendError> {
        let out = File::create(path).map_err(|e| BackendError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(RecordingBackend {
            inner,
            out: Mutex::new(out),
        })
    }
}

impl<B: AgentBackend> AgentBackend for RecordingBackend<B> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        // Holding the lock across the call keeps the transcript in request order.
        let mut out = self.out.lock().expect("recorder lock");
        let response = self.inner.complete(request)?;
        let entry = TranscriptEntry {
            digest: request.digest(),
            response: response.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("entry serializes");
        line.push('\n');
        out.write_all(line.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| BackendError::File {
                path: "transcript".into(),
                message: e.to_string(),
            })?;
        Ok(response)
    }
}

/// Endpoint settings for an OpenAI-compatible chat completions API.
#[derive(Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl LiveConfig {
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        LiveConfig {
            base_url: var(ENV_BASE_URL).unwrap_or_else(|| DEFAULT_BASE_URL.to_string()),
            model: var(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            api_key: var(ENV_API_KEY).or_else(|| var(ENV_API_KEY_FALLBACK)),
            timeout: Duration::from_secs(180),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

#[derive(Debug)]
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(LiveBackend { config, client })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }
}

impl AgentBackend for LiveBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: request.prompt,
            }],
            temperature: request.temperature,
        };
        tracing::debug!(
            endpoint = %self.config.endpoint(),
            template = %request.template,
            "sending completion request"
        );
        let mut req = self.client.post(self.config.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(500).collect();
            return Err(BackendError::Http {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::MalformedResponse("no choices[0].message.content".into()))
    }

    fn supports_parallel(&self) -> bool {
        true
    }
}
