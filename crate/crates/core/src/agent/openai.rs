use std::time::Duration;

use serde::Deserialize;

use super::backend::{BackendConfig, BackendError, ChatBackend, ChatRequest};

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct OpenAiBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl OpenAiBackend {
    /// Reads the API key from the environment variable named in `config`;
    /// without one, requests are sent unauthenticated.
    pub fn from_config(config: &BackendConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(config, api_key)
    }

    pub fn new(config: &BackendConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        OpenAiBackend {
            agent,
            url: format!("{}/chat/completions", config.endpoint.trim_end_matches('/')),
            api_key,
        }
    }
}

impl ChatBackend for OpenAiBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(request).map_err(|e| match e {
            ureq::Error::Timeout(t) => BackendError::Timeout(t.to_string()),
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(t) => BackendError::Timeout(t.to_string()),
            other => BackendError::Transport(other.to_string()),
        })?;
        match status {
            200..=299 => {}
            429 => return Err(BackendError::Quota(body)),
            _ => return Err(BackendError::Http { status, body }),
        }
        let parsed: Completion = serde_json::from_str(&body).map_err(|e| BackendError::Response(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Response("no message content".into()))
    }
}
