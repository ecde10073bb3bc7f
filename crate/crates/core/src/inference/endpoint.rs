use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::prompt::ChatMessage;
use super::TransportError;

/// Environment variable holding the bearer token for HTTP endpoints.
pub const API_KEY_ENV: &str = "STANCE_API_KEY";

/// Base address plus model identifier of a chat-completion service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointDescriptor {
    pub base_url: String,
    pub model: String,
}

impl EndpointDescriptor {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
        }
    }

    /// `<base>/chat/completions`, tolerating a trailing slash on the base.
    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Request body of the chat-completion protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub content: String,
    /// Exact token counts, when the service reports them.
    pub usage: Option<Usage>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            usage: None,
        }
    }

    /// Decodes a response body, reading `choices[0].message.content` and the
    /// optional `usage` block.
    pub fn from_json(body: &Value) -> Result<Self, TransportError> {
        let content = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| TransportError::retryable("response has no choices[0].message.content"))?;
        let usage = body.get("usage").and_then(|u| {
            Some(Usage {
                prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
                completion_tokens: u.get("completion_tokens")?.as_u64()?,
            })
        });
        Ok(Self {
            content: content.to_string(),
            usage,
        })
    }
}

/// Anything that can answer a chat-completion request.
pub trait ChatEndpoint: Send + Sync {
    /// Model identifier recorded alongside every result.
    fn model(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

/// Chat-completion client over HTTP with optional bearer-token auth.
pub struct HttpEndpoint {
    descriptor: EndpointDescriptor,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(
        descriptor: EndpointDescriptor,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::fatal(e.to_string()))?;
        Ok(Self {
            descriptor,
            api_key,
            client,
        })
    }

    /// Builds a client whose bearer token comes from [`API_KEY_ENV`], if set.
    pub fn from_env(descriptor: EndpointDescriptor) -> Result<Self, TransportError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(descriptor, key, Duration::from_secs(120))
    }

    pub fn descriptor(&self) -> &EndpointDescriptor {
        &self.descriptor
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn model(&self) -> &str {
        &self.descriptor.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let mut builder = self.client.post(self.descriptor.completions_url()).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| TransportError {
            message: e.to_string(),
            status: None,
            retryable: true,
        })?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let body = response.text().unwrap_or_default();
            return Err(TransportError {
                message: format!("HTTP {status}: {}", body.chars().take(200).collect::<String>()),
                status: Some(status.as_u16()),
                retryable,
            });
        }
        let body: Value = response
            .json()
            .map_err(|e| TransportError::retryable(format!("invalid response body: {e}")))?;
        ChatResponse::from_json(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn url_joins_base_and_path() {
        let d = EndpointDescriptor::new("http://localhost:8080/v1/", "m");
        assert_eq!(d.completions_url(), "http://localhost:8080/v1/chat/completions");
    }

    #[test]
    fn request_body_has_the_wire_shape() {
        let req = ChatRequest {
            model: "llama".into(),
            messages: vec![ChatMessage::system("s"), ChatMessage::user("u")],
            temperature: 0.0,
        };
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(
            v,
            json!({
                "model": "llama",
                "messages": [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}],
                "temperature": 0.0
            })
        );
    }

    #[test]
    fn response_content_and_usage_are_read() {
        let body = json!({
            "choices": [{"message": {"role": "assistant", "content": "neutral"}}],
            "usage": {"prompt_tokens": 112, "completion_tokens": 1, "total_tokens": 113}
        });
        let r = ChatResponse::from_json(&body).unwrap();
        assert_eq!(r.content, "neutral");
        assert_eq!(
            r.usage,
            Some(Usage {
                prompt_tokens: 112,
                completion_tokens: 1
            })
        );

        let r = ChatResponse::from_json(&json!({"choices": [{"message": {"content": "x"}}]})).unwrap();
        assert_eq!(r.usage, None);
        assert!(ChatResponse::from_json(&json!({"choices": []})).is_err());
    }
}
