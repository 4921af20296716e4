use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cache::{lookup_or_call_parsed, ResponseCache, Usage};
use crate::gateway::{ChatRequest, Gateway, GatewayError, ResponseFormat, RetryPolicy};
use crate::prompts::PromptTemplate;

/// Template plus model settings for one LLM step.
#[derive(Debug, Clone, Copy)]
pub struct StepSpec<'a> {
    pub template: &'a PromptTemplate,
    pub model: &'a str,
    pub temperature: f64,
    pub prompt_version: &'a str,
}

impl StepSpec<'_> {
    pub fn request(&self, vars: &[(&str, &str)]) -> ChatRequest {
        let (system_prompt, user_prompt) = self.template.render(vars);
        ChatRequest {
            model: self.model.to_string(),
            system_prompt,
            user_prompt,
            temperature: self.temperature,
            response_format: ResponseFormat::JsonObject,
            prompt_version: self.prompt_version.to_string(),
        }
    }
}

/// Everything a step needs to reach the model: gateway, optional cache and
/// retry policy. Shared read-only by concurrent workers.
#[derive(Clone, Copy)]
pub struct StepCaller<'a> {
    pub gateway: &'a dyn Gateway,
    pub cache: Option<&'a ResponseCache>,
    pub policy: &'a RetryPolicy,
}

impl<'a> StepCaller<'a> {
    pub fn new(gateway: &'a dyn Gateway, policy: &'a RetryPolicy) -> Self {
        StepCaller { gateway, cache: None, policy }
    }

    pub fn with_cache(mut self, cache: Option<&'a ResponseCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn call<T>(
        &self,
        request: &ChatRequest,
        usage: &mut Usage,
        diagnostics: &mut Vec<String>,
        parse: impl Fn(&str) -> Result<T, GatewayError>,
    ) -> Result<T, GatewayError> {
        lookup_or_call_parsed(request, self.gateway, self.cache, self.policy, usage, diagnostics, parse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Extraction,
    Comparison,
    Grouping,
    Direct,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::Extraction => "extraction",
            Step::Comparison => "comparison",
            Step::Grouping => "grouping",
            Step::Direct => "direct",
        })
    }
}

/// A unit of work (a review, or the whole product for single-call steps)
/// that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedUnit {
    pub unit_id: String,
    pub step: Step,
    pub error: GatewayError,
}

impl fmt::Display for FailedUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed for {}: {}", self.step, self.unit_id, self.error)
    }
}
