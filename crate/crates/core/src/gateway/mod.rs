//! Chat-completion gateway: request/response types, request fingerprints,
//! retry with exponential backoff, and the backends (live HTTP, fixture
//! replay/record, scripted offline model).

mod http;
mod replay;
pub mod scripted;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{HttpBackend, DEFAULT_BASE_URL};
pub use replay::{read_fixture_dir, write_fixture, FixtureEntry, RecordingBackend, ReplayBackend};
pub use scripted::{Script, ScriptedBackend};

/// Environment variable consulted for the provider API key.
pub const API_KEY_ENV: &str = "PRAISE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFormat {
    FreeText,
    JsonObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub response_format: ResponseFormat,
    /// Version tag of the prompt template set that produced this request.
    #[serde(default)]
    pub prompt_version: String,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: 0.0,
            response_format: ResponseFormat::JsonObject,
            prompt_version: String::new(),
        }
    }

    /// Hex SHA-256 over the request content. Stable across processes; the
    /// credential is never part of a request and so never part of the hash.
    pub fn fingerprint(&self) -> String {
        fingerprint(self)
    }
}

pub fn fingerprint(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    // Length-prefixed fields, so no two field splits collide.
    let format = match request.response_format {
        ResponseFormat::FreeText => "free_text",
        ResponseFormat::JsonObject => "json_object",
    };
    let temperature = format!("{:?}", request.temperature);
    for field in [
        request.model.as_str(),
        request.system_prompt.as_str(),
        request.user_prompt.as_str(),
        temperature.as_str(),
        format,
        request.prompt_version.as_str(),
    ] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model: String,
    pub latency_ms: u64,
}

/// Error classes a [`RetryPolicy`] may choose to retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Transport,
    RateLimited,
    MalformedOutput,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited by provider")]
    RateLimited,
    #[error("authentication rejected by provider")]
    AuthFailed,
    #[error("no recorded fixture for request {0}")]
    NoFixture(String),
    #[error("malformed model output: {0}")]
    MalformedOutput(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: Box<GatewayError> },
}

impl GatewayError {
    pub fn class(&self) -> Option<ErrorClass> {
        match self {
            GatewayError::Transport(_) => Some(ErrorClass::Transport),
            GatewayError::RateLimited => Some(ErrorClass::RateLimited),
            GatewayError::MalformedOutput(_) => Some(ErrorClass::MalformedOutput),
            _ => None,
        }
    }

    /// Attempts consumed before this error was returned.
    pub fn attempts(&self) -> u32 {
        match self {
            GatewayError::ExhaustedRetries { attempts, .. } => *attempts,
            _ => 1,
        }
    }
}

/// A chat-completion backend. Implementations must tolerate concurrent calls.
pub trait Gateway: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<G: Gateway + ?Sized> Gateway for &G {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<G: Gateway + ?Sized> Gateway for Box<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<G: Gateway + ?Sized> Gateway for std::sync::Arc<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

/// Provider API key. Held in memory only: it has no `Serialize` impl and
/// its `Debug`/`Display` output is redacted.
#[derive(Clone)]
pub struct ApiCredential(String);

impl ApiCredential {
    pub fn new(key: impl Into<String>) -> Option<Self> {
        let key = key.into();
        if key.trim().is_empty() {
            None
        } else {
            Some(ApiCredential(key))
        }
    }

    pub fn from_env(var: &str) -> Option<Self> {
        std::env::var(var).ok().and_then(ApiCredential::new)
    }

    pub(crate) fn secret(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiCredential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiCredential(<redacted>)")
    }
}

impl fmt::Display for ApiCredential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub backoff_factor: f64,
    pub retryable_errors: BTreeSet<ErrorClass>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 500,
            backoff_factor: 2.0,
            retryable_errors: [ErrorClass::Transport, ErrorClass::RateLimited, ErrorClass::MalformedOutput]
                .into_iter()
                .collect(),
        }
    }
}

impl RetryPolicy {
    /// Policy with no sleeping between attempts, for offline runs and tests.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy { max_attempts, base_delay_ms: 0, ..RetryPolicy::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts < 1 {
            return Err("retry.max_attempts must be at least 1".into());
        }
        if !self.backoff_factor.is_finite() || self.backoff_factor < 1.0 {
            return Err("retry.backoff_factor must be a finite number >= 1.0".into());
        }
        Ok(())
    }

    /// Delay before retry number `k` (1-based): `base * factor^(k-1)`.
    pub fn delay(&self, k: u32) -> Duration {
        let exponent = k.saturating_sub(1) as i32;
        let ms = self.base_delay_ms as f64 * self.backoff_factor.powi(exponent);
        if !ms.is_finite() || ms >= u64::MAX as f64 {
            return Duration::from_millis(u64::MAX);
        }
        Duration::from_millis(ms.round() as u64)
    }

    pub fn is_retryable(&self, error: &GatewayError) -> bool {
        error.class().is_some_and(|c| self.retryable_errors.contains(&c))
    }
}

/// A successful call together with the number of retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Retried<T> {
    pub value: T,
    pub response: ChatResponse,
    pub retries: u32,
}

/// Calls the gateway and parses the response, retrying retryable failures
/// (including parse failures) per `policy`. Non-retryable errors return
/// immediately; exhausting `max_attempts` yields `ExhaustedRetries`.
pub fn call_with_retry<T>(
    gateway: &dyn Gateway,
    request: &ChatRequest,
    policy: &RetryPolicy,
    mut parse: impl FnMut(&ChatResponse) -> Result<T, GatewayError>,
) -> Result<Retried<T>, GatewayError> {
    if request.model.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("model id is empty".into()));
    }
    let max_attempts = policy.max_attempts.max(1);
    let mut attempt = 1;
    loop {
        let outcome = gateway.complete(request).and_then(|response| parse(&response).map(|value| (value, response)));
        match outcome {
            Ok((value, response)) => {
                return Ok(Retried { value, response, retries: attempt - 1 });
            }
            Err(error) if !policy.is_retryable(&error) => return Err(error),
            Err(error) if attempt >= max_attempts => {
                return Err(GatewayError::ExhaustedRetries { attempts: attempt, last: Box::new(error) });
            }
            Err(error) => {
                log::debug!("attempt {attempt} failed ({error}); retrying");
                let delay = policy.delay(attempt);
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
                attempt += 1;
            }
        }
    }
}

pub fn complete_with_retry(
    gateway: &dyn Gateway,
    request: &ChatRequest,
    policy: &RetryPolicy,
) -> Result<Retried<ChatResponse>, GatewayError> {
    call_with_retry(gateway, request, policy, |response| Ok(response.clone()))
}

/// Extracts the JSON object from a model completion, tolerating a Markdown
/// code fence around it.
pub fn parse_json_object(text: &str) -> Result<serde_json::Map<String, serde_json::Value>, GatewayError> {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        body = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    match serde_json::from_str::<serde_json::Value>(body) {
        Ok(serde_json::Value::Object(map)) => Ok(map),
        Ok(_) => Err(GatewayError::MalformedOutput("expected a JSON object".into())),
        Err(e) => Err(GatewayError::MalformedOutput(format!("invalid JSON: {e}"))),
    }
}

/// Reads a string field, accepting numbers and booleans as their JSON text.
pub(crate) fn string_field(row: &serde_json::Map<String, serde_json::Value>, name: &str) -> Option<String> {
    match row.get(name)? {
        serde_json::Value::String(s) => Some(s.trim().to_string()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}
