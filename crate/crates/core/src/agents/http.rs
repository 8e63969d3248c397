use serde_json::{json, Value};

use super::CompletionProvider;
use crate::provider::{HttpSettings, JsonClient, ProviderError};

/// Chat-completions client for OpenAI-compatible endpoints. Requests use
/// temperature 0.
pub struct HttpCompletionProvider {
    client: JsonClient,
}

impl HttpCompletionProvider {
    pub fn new(settings: HttpSettings) -> Result<Self, ProviderError> {
        Ok(Self {
            client: JsonClient::new(settings)?,
        })
    }
}

impl CompletionProvider for HttpCompletionProvider {
    fn name(&self) -> &str {
        &self.client.settings().model
    }

    fn complete(&self, system: &str, user: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.client.settings().model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let resp = self.client.post("chat/completions", &body)?;
        resp.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Response("no choices[0].message.content".into()))
    }
}
