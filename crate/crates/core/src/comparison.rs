//! Step 2: compare one review's attributes with the seller description.

use serde_json::json;

use crate::cache::Usage;
use crate::domain::{
    normalize_key, normalize_value, parse_status, ComparedAttribute, ComparisonStatus, ExtractedAttribute,
};
use crate::gateway::{parse_json_object, string_field, ChatRequest, GatewayError};
use crate::step::{FailedUnit, Step, StepCaller, StepSpec};

pub const COMPARISON_SCHEMA: &str = r#"{"results": [{"attribute": "<string>", "value": "<string>", "status": "Missing" | "Contradictory" | "Partially-matching" | "Matching", "justification": "<string>"}]}"#;

/// Justification given to input attributes the model left out.
pub const OMITTED_JUSTIFICATION: &str = "model omitted; defaulted";

/// Parsed comparison rows (one per input attribute, in input order) plus
/// notes about rows that had to be dropped or defaulted.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonParse {
    pub rows: Vec<ComparedAttribute>,
    pub diagnostics: Vec<String>,
}

/// One JSON line per attribute: `{"attribute": key, "value": value}`.
pub fn render_attribute_lines(attrs: &[ExtractedAttribute]) -> String {
    attrs
        .iter()
        .map(|a| json!({"attribute": a.key.as_str(), "value": a.value}).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_comparison_prompt(
    attrs: &[ExtractedAttribute],
    seller_description: &str,
    spec: &StepSpec<'_>,
) -> ChatRequest {
    let lines = render_attribute_lines(attrs);
    spec.request(&[
        ("schema", COMPARISON_SCHEMA),
        ("seller_description", seller_description.trim()),
        ("attributes", &lines),
    ])
}

/// Joins model rows back to `attrs` on (normalized key, normalized value);
/// duplicate pairs join in input order. Rows with no matching input are
/// dropped as hallucinated; inputs with no row default to `Missing`. Any
/// status outside the taxonomy makes the whole response malformed.
pub fn parse_comparison_response(text: &str, attrs: &[ExtractedAttribute]) -> Result<ComparisonParse, GatewayError> {
    let object = parse_json_object(text)?;
    let rows = object
        .get("results")
        .and_then(|v| v.as_array())
        .ok_or_else(|| GatewayError::MalformedOutput("missing `results` array".into()))?;

    let review_id = attrs.first().map(|a| a.review_id.as_str()).unwrap_or("?");
    let join_keys: Vec<(String, String)> =
        attrs.iter().map(|a| (a.key.as_str().to_string(), normalize_value(&a.value))).collect();
    let mut assigned: Vec<Option<(ComparisonStatus, String)>> = vec![None; attrs.len()];
    let mut diagnostics = Vec::new();

    for (i, row) in rows.iter().enumerate() {
        let row =
            row.as_object().ok_or_else(|| GatewayError::MalformedOutput(format!("result {i} is not an object")))?;
        let field = |name: &str| {
            string_field(row, name).ok_or_else(|| GatewayError::MalformedOutput(format!("result {i} lacks `{name}`")))
        };
        let (raw_key, value, label) = (field("attribute")?, field("value")?, field("status")?);
        let status = parse_status(&label).map_err(|e| GatewayError::MalformedOutput(e.to_string()))?;
        let justification = string_field(row, "justification").unwrap_or_default();

        let target = normalize_key(&raw_key).ok().and_then(|key| {
            let wanted = (key.as_str().to_string(), normalize_value(&value));
            (0..attrs.len()).find(|&j| assigned[j].is_none() && join_keys[j] == wanted)
        });
        match target {
            Some(j) => {
                if status == ComparisonStatus::Contradictory && justification.is_empty() {
                    diagnostics.push(format!(
                        "review {review_id}: contradictory {}={:?} has no justification",
                        attrs[j].key, attrs[j].value
                    ));
                }
                assigned[j] = Some((status, justification));
            }
            None => diagnostics
                .push(format!("review {review_id}: hallucinated comparison row {raw_key:?}={value:?} dropped")),
        }
    }

    let rows = attrs
        .iter()
        .zip(assigned)
        .map(|(attr, slot)| {
            let (status, justification) = slot.unwrap_or_else(|| {
                diagnostics.push(format!(
                    "review {}: model omitted {}={:?}; defaulted to Missing",
                    attr.review_id, attr.key, attr.value
                ));
                (ComparisonStatus::Missing, OMITTED_JUSTIFICATION.to_string())
            });
            ComparedAttribute { attribute: attr.clone(), status, justification }
        })
        .collect();
    Ok(ComparisonParse { rows, diagnostics })
}

/// One call for the whole batch; an empty batch makes no call.
pub fn compare_review(
    attrs: &[ExtractedAttribute],
    seller_description: &str,
    spec: &StepSpec<'_>,
    caller: &StepCaller<'_>,
    usage: &mut Usage,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<ComparedAttribute>, FailedUnit> {
    if attrs.is_empty() {
        return Ok(Vec::new());
    }
    let request = build_comparison_prompt(attrs, seller_description, spec);
    let parsed = caller
        .call(&request, usage, diagnostics, |text| parse_comparison_response(text, attrs))
        .map_err(|error| FailedUnit { unit_id: attrs[0].review_id.clone(), step: Step::Comparison, error })?;
    diagnostics.extend(parsed.diagnostics);
    Ok(parsed.rows)
}
