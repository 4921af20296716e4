use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{ApiCredential, ChatRequest, ChatResponse, Gateway, GatewayError, ResponseFormat};

/// OpenAI-compatible endpoint of the Gemini API.
pub const DEFAULT_BASE_URL: &str = "https://generativelanguage.googleapis.com/v1beta/openai";

/// Live backend speaking the OpenAI-style `POST {base}/chat/completions`
/// shape with bearer-token auth.
pub struct HttpBackend {
    client: Client,
    endpoint: String,
    credential: ApiCredential,
}

impl HttpBackend {
    pub fn new(base_url: &str, credential: ApiCredential) -> Result<Self, GatewayError> {
        Self::with_timeout(base_url, credential, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: &str, credential: ApiCredential, timeout: Duration) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Transport(format!("building HTTP client: {e}")))?;
        Ok(HttpBackend { client, endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')), credential })
    }

    fn body(request: &ChatRequest) -> Value {
        let mut body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
        });
        if request.response_format == ResponseFormat::JsonObject {
            body["response_format"] = json!({"type": "json_object"});
        }
        body
    }
}

impl Gateway for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let started = Instant::now();
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(self.credential.secret())
            .json(&Self::body(request))
            .send()
            // without_url: the error text must not echo request details.
            .map_err(|e| GatewayError::Transport(e.without_url().to_string()))?;

        match response.status() {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => return Err(GatewayError::AuthFailed),
            StatusCode::TOO_MANY_REQUESTS => return Err(GatewayError::RateLimited),
            status if !status.is_success() => {
                return Err(GatewayError::Transport(format!("provider returned HTTP {status}")))
            }
            _ => {}
        }

        let payload: Value = response
            .json()
            .map_err(|e| GatewayError::Transport(format!("unreadable provider response: {}", e.without_url())))?;
        let text = payload
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::Transport("provider response has no message content".into()))?;
        let model = payload.get("model").and_then(Value::as_str).unwrap_or(&request.model);
        // Responses are persisted, so a provider echoing the key must not
        // carry it into fixtures or the cache.
        let secret = self.credential.secret();
        Ok(ChatResponse {
            text: text.replace(secret, "<redacted>"),
            model: model.replace(secret, "<redacted>"),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_shape() {
        let mut request = ChatRequest::new("gemini-2.0-flash", "sys", "usr");
        let body = HttpBackend::body(&request);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "usr");
        assert_eq!(body["response_format"]["type"], "json_object");
        request.response_format = ResponseFormat::FreeText;
        assert!(HttpBackend::body(&request).get("response_format").is_none());
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let key = ApiCredential::new("k").unwrap();
        let backend = HttpBackend::with_timeout("http://127.0.0.1:9", key, Duration::from_millis(500)).unwrap();
        let err = backend.complete(&ChatRequest::new("m", "s", "u")).unwrap_err();
        assert!(matches!(err, GatewayError::Transport(_)), "{err:?}");
    }
}
