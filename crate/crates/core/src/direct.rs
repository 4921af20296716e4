//! Single-prompt report generation used by the baseline and ablated modes.
//! The model returns a flat list of findings that is folded into the same
//! report type the full pipeline produces.

use serde_json::json;

use crate::domain::{
    normalize_key, parse_status, CategoryAssignment, ComparedAttribute, ExtractedAttribute, ProductRecord,
};
use crate::gateway::{parse_json_object, string_field, ChatRequest, GatewayError};
use crate::step::StepSpec;

pub const FINDINGS_SCHEMA: &str = r#"{"findings": [{"attribute": "<string>", "value": "<string>", "status": "Missing" | "Contradictory" | "Partially-matching" | "Matching", "category": "<string>", "justification": "<string>", "review_ids": ["<string>"]}]}"#;

/// Findings expanded to one compared row per cited review, plus the
/// categories the model chose (first choice per key wins).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectFindings {
    pub rows: Vec<ComparedAttribute>,
    pub categories: CategoryAssignment,
    pub diagnostics: Vec<String>,
}

/// Reviews as JSON lines: `{"review_id": ..., "text": ...}`.
pub fn render_review_lines(product: &ProductRecord) -> String {
    product
        .reviews
        .iter()
        .map(|r| json!({"review_id": r.review_id, "text": r.text.trim()}).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_baseline_prompt(product: &ProductRecord, spec: &StepSpec<'_>) -> ChatRequest {
    let reviews = render_review_lines(product);
    spec.request(&[
        ("schema", FINDINGS_SCHEMA),
        ("title", &product.title),
        ("seller_description", product.seller_description.trim()),
        ("reviews", &reviews),
    ])
}

pub fn build_ablated_prompt(
    product: &ProductRecord,
    extracted: &[ExtractedAttribute],
    spec: &StepSpec<'_>,
) -> ChatRequest {
    let lines = extracted
        .iter()
        .map(|a| json!({"review_id": a.review_id, "attribute": a.key.as_str(), "value": a.value}).to_string())
        .collect::<Vec<_>>()
        .join("\n");
    spec.request(&[
        ("schema", FINDINGS_SCHEMA),
        ("title", &product.title),
        ("seller_description", product.seller_description.trim()),
        ("extracted_attributes", &lines),
    ])
}

/// A response that is not a JSON object with a `findings` array is
/// malformed (and retryable). Individual bad rows are dropped with a
/// diagnostic: unknown status, empty attribute or value, or no review id
/// belonging to `product`.
pub fn parse_findings(text: &str, product: &ProductRecord) -> Result<DirectFindings, GatewayError> {
    let object = parse_json_object(text)?;
    let rows = object
        .get("findings")
        .and_then(|v| v.as_array())
        .ok_or_else(|| GatewayError::MalformedOutput("missing `findings` array".into()))?;

    let mut out = DirectFindings::default();
    for (i, row) in rows.iter().enumerate() {
        let Some(row) = row.as_object() else {
            out.diagnostics.push(format!("finding {i}: not an object; dropped"));
            continue;
        };
        let raw_key = string_field(row, "attribute").unwrap_or_default();
        let value = string_field(row, "value").unwrap_or_default();
        let Ok(key) = normalize_key(&raw_key) else {
            out.diagnostics.push(format!("finding {i}: empty attribute; dropped"));
            continue;
        };
        if value.is_empty() {
            out.diagnostics.push(format!("finding {i}: empty value for {key}; dropped"));
            continue;
        }
        let status = match parse_status(&string_field(row, "status").unwrap_or_default()) {
            Ok(status) => status,
            Err(e) => {
                out.diagnostics.push(format!("finding {i}: {e}; dropped"));
                continue;
            }
        };
        let mut review_ids: Vec<String> = row
            .get("review_ids")
            .and_then(|v| v.as_array())
            .map(|ids| ids.iter().filter_map(|id| id.as_str().map(str::to_string)).collect())
            .unwrap_or_default();
        review_ids.dedup();
        let (known, unknown): (Vec<String>, Vec<String>) =
            review_ids.into_iter().partition(|id| product.review(id).is_some());
        if !unknown.is_empty() {
            out.diagnostics.push(format!("finding {i}: unknown review ids {unknown:?} ignored"));
        }
        if known.is_empty() {
            out.diagnostics.push(format!("finding {i}: {key} cites no known review; dropped"));
            continue;
        }
        let category = string_field(row, "category").unwrap_or_default();
        if !category.is_empty() {
            out.categories.mapping.entry(key.clone()).or_insert(category);
        }
        let justification = string_field(row, "justification").unwrap_or_default();
        for review_id in known {
            out.rows.push(ComparedAttribute {
                attribute: ExtractedAttribute {
                    key: key.clone(),
                    value: value.clone(),
                    review_id,
                    raw_key: raw_key.clone(),
                },
                status,
                justification: justification.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ComparisonStatus, Review};
    use crate::prompts::PromptSet;

    fn product() -> ProductRecord {
        ProductRecord {
            product_id: "p".into(),
            title: "Kettle".into(),
            category: "Appliances".into(),
            seller_description: "A 1.7 litre kettle.".into(),
            reviews: vec![
                Review { review_id: "r1".into(), text: "Holds 1.7 litres.".into(), rating: Some(5) },
                Review { review_id: "r2".into(), text: "Loved it".into(), rating: None },
            ],
        }
    }

    #[test]
    fn prompts_embed_inputs() {
        let prompts = PromptSet::builtin();
        let spec = StepSpec { template: &prompts.baseline, model: "m", temperature: 0.0, prompt_version: "v1" };
        let request = build_baseline_prompt(&product(), &spec);
        assert!(request.user_prompt.contains(r#"{"review_id":"r1","text":"Holds 1.7 litres."}"#));
        assert!(request.user_prompt.contains("A 1.7 litre kettle."));
        assert!(request.system_prompt.contains(FINDINGS_SCHEMA));
    }

    #[test]
    fn findings_expand_per_review() {
        let text = json!({"findings": [
            {"attribute": "Capacity", "value": "1.7 l", "status": "Matching", "category": "Physical Attributes",
             "justification": "A 1.7 litre kettle.", "review_ids": ["r1", "r2", "r9"]},
            {"attribute": "color", "value": "red", "status": "sorta", "category": "Appearance", "review_ids": ["r1"]},
            {"attribute": "noise", "value": "loud", "status": "Missing", "category": "Performance", "review_ids": []},
        ]})
        .to_string();
        let parsed = parse_findings(&text, &product()).unwrap();
        assert_eq!(parsed.rows.len(), 2);
        assert!(parsed.rows.iter().all(|r| r.status == ComparisonStatus::Matching));
        assert_eq!(parsed.categories.mapping.len(), 1);
        assert_eq!(parsed.diagnostics.len(), 3);

        assert!(matches!(parse_findings("no", &product()), Err(GatewayError::MalformedOutput(_))));
    }
}
