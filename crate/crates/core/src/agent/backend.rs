use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::parse::format_node_reply;
use super::prompt::parse_user_query;
use crate::dataset::{Corpus, Segment};
use crate::features::RuleEngine;
use crate::Task;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

/// One chat-completion call, in the OpenAI-compatible request shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Hex SHA-256 of the request's JSON; the replay file key.
    pub fn key(&self) -> String {
        let json = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("quota or rate limit exceeded: {0}")]
    Quota(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed response: {0}")]
    Response(String),
}

impl BackendError {
    /// Timeouts, transport failures and server errors are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Timeout(_) | BackendError::Transport(_) => true,
            BackendError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// A chat-completion service. Implementations are shared across worker
/// threads.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

/// Where and how to reach a live model, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First retry delay; doubled on each further retry.
    pub retry_backoff_ms: u64,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 3,
            retry_backoff_ms: 1000,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

impl BackendConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: BackendConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.model.trim().is_empty() {
            return Err("model is empty".into());
        }
        Ok(())
    }

    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            temperature: self.temperature,
            messages,
        }
    }
}

/// Sends `request`, retrying transient failures up to `max_retries` times
/// with exponential backoff.
pub fn complete(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    config: &BackendConfig,
) -> Result<String, BackendError> {
    if request.messages.is_empty() {
        return Err(BackendError::InvalidRequest("no messages".into()));
    }
    let mut attempt = 0;
    loop {
        match backend.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_transient() && attempt < config.max_retries => {
                let delay = config.retry_backoff_ms.saturating_mul(1 << attempt.min(16));
                log::warn!("attempt {} failed ({e}); retrying in {delay} ms", attempt + 1);
                std::thread::sleep(Duration::from_millis(delay));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Offline backend that answers from the rule engine.
///
/// Requests whose messages contain an ```analysis format get a structured
/// node reply whose confidences are the rule scores; other requests get the
/// bare label. Replies depend only on the request.
#[derive(Debug, Clone)]
pub struct MockBackend {
    engine: RuleEngine,
    task: Task,
}

impl MockBackend {
    pub fn new(engine: RuleEngine, task: Task) -> Self {
        MockBackend { engine, task }
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let (ipa, german) = request
            .messages
            .iter()
            .rev()
            .filter(|m| m.role == "user")
            .find_map(|m| parse_user_query(&m.content))
            .ok_or_else(|| BackendError::InvalidRequest("mock backend found no [USER] query".into()))?;
        let seg = Segment {
            id: "query".into(),
            corpus: Corpus::Stt,
            sentence_id: None,
            audio_path: None,
            ipa_transcription: ipa,
            standard_german: german,
            canton: None,
            stt_region: None,
            label8: None,
            source_class: None,
            label2: None,
        };
        let analysis = self
            .engine
            .analyze(&seg, self.task)
            .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
        let (label, _) = analysis.scores.argmax();
        let structured = request.messages.iter().any(|m| m.content.contains("```analysis"));
        if !structured {
            return Ok(label.reply_form());
        }
        let reasoning = if analysis.hits.is_empty() {
            "No listed dialect feature was found.".to_string()
        } else {
            let parts: Vec<String> = analysis
                .hits
                .iter()
                .map(|h| {
                    format!(
                        "{} in {} ({} > {})",
                        h.rule_id,
                        h.orthography,
                        h.ref_phone,
                        h.dialect_phones.join(" ")
                    )
                })
                .collect();
            format!("Features found: {}.", parts.join("; "))
        };
        Ok(format_node_reply(&analysis.scores, &reasoning, label))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayRecord {
    key: String,
    request: ChatRequest,
    response: String,
}

/// Answers from a replay file (JSON lines of request key, request and
/// response). Unknown requests fail with [`BackendError::ReplayMiss`].
#[derive(Debug, Default)]
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut responses = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| format!("{}: {e}", path.display()))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ReplayRecord>(&line) {
                Ok(r) => {
                    responses.insert(r.key, r.response);
                }
                // A crash while recording can leave a partial last line.
                Err(e) => log::warn!("{}:{}: skipping unreadable record: {e}", path.display(), i + 1),
            }
        }
        Ok(ReplayBackend { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = request.key();
        self.responses.get(&key).cloned().ok_or(BackendError::ReplayMiss(key))
    }
}

/// Passes requests to an inner backend and appends each successful exchange
/// to a replay file.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    file: Mutex<File>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(RecordingBackend {
            inner,
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let response = self.inner.complete(request)?;
        let record = ReplayRecord {
            key: request.key(),
            request: request.clone(),
            response: response.clone(),
        };
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
            log::error!("could not record response to {}: {e}", self.path.display());
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        error: BackendError,
    }

    impl ChatBackend for Flaky {
        fn complete(&self, _: &ChatRequest) -> Result<String, BackendError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.error.clone())
            } else {
                Ok("ok".into())
            }
        }
    }

    fn quick() -> BackendConfig {
        BackendConfig {
            max_retries: 2,
            retry_backoff_ms: 0,
            ..Default::default()
        }
    }

    fn req() -> ChatRequest {
        quick().request(vec![ChatMessage::user("hi")])
    }

    #[test]
    fn transient_errors_are_retried() {
        let b = Flaky {
            failures: 2,
            calls: AtomicU32::new(0),
            error: BackendError::Timeout("slow".into()),
        };
        assert_eq!(complete(&b, &req(), &quick()).unwrap(), "ok");
        let b = Flaky {
            failures: 3,
            calls: AtomicU32::new(0),
            error: BackendError::Transport("reset".into()),
        };
        assert!(matches!(
            complete(&b, &req(), &quick()),
            Err(BackendError::Transport(_))
        ));
        assert_eq!(b.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn quota_is_not_retried() {
        let b = Flaky {
            failures: 1,
            calls: AtomicU32::new(0),
            error: BackendError::Quota("429".into()),
        };
        assert!(matches!(complete(&b, &req(), &quick()), Err(BackendError::Quota(_))));
        assert_eq!(b.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn empty_messages_rejected() {
        let b = Flaky {
            failures: 0,
            calls: AtomicU32::new(0),
            error: BackendError::Timeout(String::new()),
        };
        let r = quick().request(vec![]);
        assert!(matches!(
            complete(&b, &r, &quick()),
            Err(BackendError::InvalidRequest(_))
        ));
    }

    #[test]
    fn key_depends_on_content() {
        let a = req();
        let mut b = req();
        assert_eq!(a.key(), b.key());
        b.temperature = 0.5;
        assert_ne!(a.key(), b.key());
        assert_eq!(a.key().len(), 64);
    }

    #[test]
    fn config_rejects_negative_temperature() {
        assert!(BackendConfig::parse("temperature = -1.0").is_err());
        assert_eq!(BackendConfig::parse("").unwrap(), BackendConfig::default());
    }
}
