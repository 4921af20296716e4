//! Step 1: per-review extraction of factual attribute-value pairs.

use crate::cache::Usage;
use crate::domain::{normalize_key, ExtractedAttribute, Review};
use crate::gateway::{parse_json_object, string_field, ChatRequest, GatewayError};
use crate::step::{FailedUnit, Step, StepCaller, StepSpec};

pub const EXTRACTION_SCHEMA: &str = r#"{"attributes": [{"attribute": "<string>", "value": "<string>"}]}"#;

pub fn build_extraction_prompt(review: &Review, title: &str, spec: &StepSpec<'_>) -> ChatRequest {
    spec.request(&[("schema", EXTRACTION_SCHEMA), ("title", title), ("review_text", review.text.trim())])
}

/// Parses `{"attributes": [...]}`. Rows with an empty key or value are
/// dropped; duplicates and input order are kept.
pub fn parse_extraction_response(text: &str, review_id: &str) -> Result<Vec<ExtractedAttribute>, GatewayError> {
    let object = parse_json_object(text)?;
    let rows = object
        .get("attributes")
        .and_then(|v| v.as_array())
        .ok_or_else(|| GatewayError::MalformedOutput("missing `attributes` array".into()))?;

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let Some(row) = row.as_object() else { continue };
        let (Some(raw_key), Some(value)) = (string_field(row, "attribute"), string_field(row, "value")) else {
            continue;
        };
        if value.is_empty() {
            continue;
        }
        let Ok(key) = normalize_key(&raw_key) else { continue };
        out.push(ExtractedAttribute { key, value, review_id: review_id.to_string(), raw_key });
    }
    Ok(out)
}

/// Build, call (cache-aware, with retries) and parse for one review.
pub fn extract_attributes(
    review: &Review,
    title: &str,
    spec: &StepSpec<'_>,
    caller: &StepCaller<'_>,
    usage: &mut Usage,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<ExtractedAttribute>, FailedUnit> {
    let request = build_extraction_prompt(review, title, spec);
    caller
        .call(&request, usage, diagnostics, |text| parse_extraction_response(text, &review.review_id))
        .map_err(|error| FailedUnit { unit_id: review.review_id.clone(), step: Step::Extraction, error })
}
