//! Step 3: one call per product assigning attribute keys to categories.

use std::collections::BTreeSet;

use crate::cache::Usage;
use crate::domain::{normalize_key, AttributeKey, CategoryAssignment, ComparedAttribute, FALLBACK_CATEGORY};
use crate::gateway::{parse_json_object, string_field, ChatRequest, GatewayError};
use crate::step::{FailedUnit, Step, StepCaller, StepSpec};

pub const GROUPING_SCHEMA: &str = r#"{"groups": [{"attribute": "<string>", "category": "<string>"}]}"#;

/// Deduplicated, sorted keys; sorting keeps the grouping request (and its
/// cache fingerprint) independent of review order.
pub fn collect_unique_keys(compared: &[ComparedAttribute]) -> Vec<AttributeKey> {
    compared.iter().map(|c| c.attribute.key.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Keys only, one per line; attribute values never reach this prompt.
pub fn build_grouping_prompt(keys: &[AttributeKey], spec: &StepSpec<'_>) -> ChatRequest {
    let lines = keys.iter().map(AttributeKey::as_str).collect::<Vec<_>>().join("\n");
    spec.request(&[("schema", GROUPING_SCHEMA), ("attribute_keys", &lines)])
}

/// Builds a mapping total over `keys`: the first row for a key wins, rows for
/// unknown keys are dropped, and unassigned keys fall back to "Other".
pub fn parse_grouping_response(
    text: &str,
    keys: &[AttributeKey],
) -> Result<(CategoryAssignment, Vec<String>), GatewayError> {
    let object = parse_json_object(text)?;
    let rows = object
        .get("groups")
        .and_then(|v| v.as_array())
        .ok_or_else(|| GatewayError::MalformedOutput("missing `groups` array".into()))?;

    let wanted: BTreeSet<&AttributeKey> = keys.iter().collect();
    let mut assignment = CategoryAssignment::default();
    let mut diagnostics = Vec::new();
    for row in rows {
        let Some(row) = row.as_object() else {
            diagnostics.push("grouping: non-object row dropped".to_string());
            continue;
        };
        let raw = string_field(row, "attribute").unwrap_or_default();
        let category = string_field(row, "category").unwrap_or_default();
        let key = match normalize_key(&raw) {
            Ok(key) if wanted.contains(&key) => key,
            _ => {
                diagnostics.push(format!("grouping: row for unknown attribute {raw:?} dropped"));
                continue;
            }
        };
        if category.is_empty() || assignment.mapping.contains_key(&key) {
            continue;
        }
        assignment.mapping.insert(key, category);
    }
    for key in keys {
        if !assignment.mapping.contains_key(key) {
            diagnostics.push(format!("grouping: no category for {key}; using {FALLBACK_CATEGORY:?}"));
            assignment.mapping.insert(key.clone(), FALLBACK_CATEGORY.to_string());
        }
    }
    Ok((assignment, diagnostics))
}

/// No keys, no call.
pub fn group_attributes(
    keys: &[AttributeKey],
    product_id: &str,
    spec: &StepSpec<'_>,
    caller: &StepCaller<'_>,
    usage: &mut Usage,
    diagnostics: &mut Vec<String>,
) -> Result<CategoryAssignment, FailedUnit> {
    if keys.is_empty() {
        return Ok(CategoryAssignment::default());
    }
    let request = build_grouping_prompt(keys, spec);
    let (assignment, notes) = caller
        .call(&request, usage, diagnostics, |text| parse_grouping_response(text, keys))
        .map_err(|error| FailedUnit { unit_id: product_id.to_string(), step: Step::Grouping, error })?;
    diagnostics.extend(notes);
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ComparisonStatus, ExtractedAttribute};
    use crate::prompts::PromptSet;
    use proptest::prelude::*;
    use serde_json::json;

    fn key(s: &str) -> AttributeKey {
        normalize_key(s).unwrap()
    }

    fn compared(raw: &str) -> ComparedAttribute {
        ComparedAttribute {
            attribute: ExtractedAttribute {
                key: key(raw),
                value: "secret-value".into(),
                review_id: "r".into(),
                raw_key: raw.into(),
            },
            status: ComparisonStatus::Missing,
            justification: String::new(),
        }
    }

    #[test]
    fn unique_keys() {
        let keys = collect_unique_keys(&[compared("weight"), compared("color"), compared("weight")]);
        assert_eq!(keys, vec![key("color"), key("weight")]);
        assert!(collect_unique_keys(&[]).is_empty());
        assert_eq!(collect_unique_keys(&[compared("Weight"), compared("weight")]), vec![key("weight")]);
    }

    #[test]
    fn prompt_has_keys_without_values() {
        let prompts = PromptSet::builtin();
        let spec = StepSpec { template: &prompts.grouping, model: "m", temperature: 0.0, prompt_version: "v1" };
        let rows = [compared("weight"), compared("color"), compared("battery life")];
        let keys = collect_unique_keys(&rows);
        let request = build_grouping_prompt(&keys, &spec);
        assert!(request.user_prompt.contains("battery_life\ncolor\nweight"));
        assert!(!request.user_prompt.contains("secret-value"));
        assert!(!request.system_prompt.contains("secret-value"));
        for example in ["Physical Attributes", "Appearance", "Performance"] {
            assert!(request.system_prompt.contains(example));
        }
        let single = build_grouping_prompt(&[key("weight")], &spec);
        assert!(single.user_prompt.ends_with("<attribute_keys>\nweight\n</attribute_keys>"));
    }

    #[test]
    fn complete_and_incomplete_responses() {
        let keys = vec![key("battery_life"), key("color"), key("weight")];
        let text = json!({"groups": [
            {"attribute": "weight", "category": "Physical Attributes"},
            {"attribute": "Color", "category": "Appearance"},
            {"attribute": "battery life", "category": "Performance"},
        ]})
        .to_string();
        let (assignment, diags) = parse_grouping_response(&text, &keys).unwrap();
        assert_eq!(assignment.category_of(&key("color")), "Appearance");
        assert_eq!(assignment.mapping.len(), 3);
        assert!(diags.is_empty());

        let partial = json!({"groups": [
            {"attribute": "weight", "category": "Physical Attributes"},
            {"attribute": "weight", "category": "Size"},
            {"attribute": "price", "category": "Cost"},
        ]})
        .to_string();
        let (assignment, diags) = parse_grouping_response(&partial, &keys).unwrap();
        assert_eq!(assignment.category_of(&key("weight")), "Physical Attributes");
        assert_eq!(assignment.category_of(&key("color")), FALLBACK_CATEGORY);
        assert_eq!(assignment.category_of(&key("battery_life")), FALLBACK_CATEGORY);
        assert!(!assignment.mapping.contains_key(&key("price")));
        assert_eq!(diags.len(), 3);

        assert!(parse_grouping_response("{}", &keys).is_err());
    }

    proptest! {
        #[test]
        fn assignment_is_total(
            keys in prop::collection::btree_set("[a-e]{1,3}", 0..8),
            rows in prop::collection::vec(("[a-e]{1,3}", "[A-Z][a-z]{0,5}"), 0..10),
        ) {
            let keys: Vec<_> = keys.iter().map(|k| key(k)).collect();
            let groups: Vec<_> = rows.iter().map(|(k, c)| json!({"attribute": k, "category": c})).collect();
            let (assignment, _) = parse_grouping_response(&json!({"groups": groups}).to_string(), &keys).unwrap();
            prop_assert_eq!(assignment.mapping.len(), keys.len());
            for k in &keys {
                prop_assert!(!assignment.category_of(k).is_empty());
            }
        }
    }
}
