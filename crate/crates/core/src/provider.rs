//! Shared plumbing for remote model endpoints (chat completions and
//! embeddings) speaking the common OpenAI-style JSON protocol.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_api_key_env() -> String {
    "ONTOLINK_API_KEY".to_string()
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

pub(crate) struct JsonClient {
    agent: ureq::Agent,
    settings: HttpSettings,
    api_key: Option<String>,
}

impl JsonClient {
    pub fn new(settings: HttpSettings) -> Result<Self, ProviderError> {
        let api_key = match std::env::var(&settings.api_key_env) {
            Ok(k) if !k.is_empty() => Some(k),
            _ => None,
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            agent: config.into(),
            settings,
            api_key,
        })
    }

    pub fn settings(&self) -> &HttpSettings {
        &self.settings
    }

    /// POST `body` to `{base_url}/{path}` with linear backoff between retries.
    /// 4xx responses other than 429 are not retried.
    pub fn post(&self, path: &str, body: &serde_json::Value) -> Result<serde_json::Value, ProviderError> {
        let url = format!("{}/{}", self.settings.base_url.trim_end_matches('/'), path);
        let mut last = ProviderError::Other("no attempt made".into());
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(500 * attempt as u64));
            }
            let mut req = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = match req.send_json(body) {
                Ok(r) => r,
                Err(e) => {
                    last = ProviderError::Transport(e.to_string());
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| ProviderError::Transport(e.to_string()));
            let text = match text {
                Ok(t) => t,
                Err(e) => {
                    last = e;
                    continue;
                }
            };
            if (200..300).contains(&status) {
                return serde_json::from_str(&text).map_err(|e| ProviderError::Response(e.to_string()));
            }
            last = ProviderError::Status { status, body: text };
            if status != 429 && (400..500).contains(&status) {
                break;
            }
        }
        Err(last)
    }
}
