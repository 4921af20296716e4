//! Deterministic offline stand-in for a model.
//!
//! A [`Script`] holds hand-authored answers: the attribute-value pairs each
//! review states, how each pair relates to the seller description, and a
//! category per attribute key. [`ScriptedBackend`] recognizes which step a
//! request belongs to from the tagged blocks in the built-in templates
//! (`<review>`, `<attributes>`, `<attribute_keys>`, `<reviews>`,
//! `<extracted_attributes>`) and answers in that step's schema. Useful for
//! demos and for recording a replay corpus without network access.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatRequest, ChatResponse, Gateway, GatewayError};
use crate::domain::{normalize_key, normalize_value, ComparisonStatus, ProductRecord, FALLBACK_CATEGORY};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedPair {
    pub attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedComparison {
    pub attribute: String,
    pub value: String,
    pub status: ComparisonStatus,
    #[serde(default)]
    pub justification: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptedProduct {
    /// review_id -> pairs the review states. Reviews absent here yield none.
    pub extractions: BTreeMap<String, Vec<ScriptedPair>>,
    /// Pairs without an entry compare as `Missing`.
    pub comparisons: Vec<ScriptedComparison>,
    /// Reviews whose extraction always fails with a transport error.
    pub fail_reviews: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Script {
    /// Normalized attribute key -> category label.
    pub categories: BTreeMap<String, String>,
    /// product_id -> authored answers.
    pub products: BTreeMap<String, ScriptedProduct>,
}

struct ProductAnswers {
    comparisons: HashMap<(String, String), (ComparisonStatus, String)>,
}

struct Finding {
    attribute: String,
    value: String,
    status: ComparisonStatus,
    justification: String,
    review_ids: Vec<String>,
}

pub struct ScriptedBackend {
    by_review_text: HashMap<String, (String, Vec<ScriptedPair>)>,
    failing_texts: HashSet<String>,
    by_description: HashMap<String, ProductAnswers>,
    categories: HashMap<String, String>,
    calls: AtomicU64,
}

fn tagged<'t>(text: &'t str, tag: &str) -> Option<&'t str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    let end = text.rfind(&close)?;
    (start <= end).then(|| text[start..end].trim())
}

fn json_lines(block: &str) -> Vec<serde_json::Map<String, Value>> {
    block
        .lines()
        .filter_map(|line| serde_json::from_str::<Value>(line.trim()).ok())
        .filter_map(|v| v.as_object().cloned())
        .collect()
}

fn field(row: &serde_json::Map<String, Value>, name: &str) -> String {
    row.get(name).and_then(Value::as_str).unwrap_or_default().to_string()
}

fn join_key(attribute: &str, value: &str) -> (String, String) {
    let key = normalize_key(attribute).map(|k| k.as_str().to_string()).unwrap_or_default();
    (key, normalize_value(value))
}

impl ScriptedBackend {
    pub fn new(products: &[ProductRecord], script: &Script) -> Self {
        let mut by_review_text = HashMap::new();
        let mut failing_texts = HashSet::new();
        let mut by_description = HashMap::new();
        for product in products {
            let answers = script.products.get(&product.product_id).cloned().unwrap_or_default();
            for review in &product.reviews {
                let text = review.text.trim().to_string();
                if answers.fail_reviews.contains(&review.review_id) {
                    failing_texts.insert(text.clone());
                }
                let pairs = answers.extractions.get(&review.review_id).cloned().unwrap_or_default();
                by_review_text.insert(text, (review.review_id.clone(), pairs));
            }
            let comparisons = answers
                .comparisons
                .iter()
                .map(|c| (join_key(&c.attribute, &c.value), (c.status, c.justification.clone())))
                .collect();
            by_description.insert(product.seller_description.trim().to_string(), ProductAnswers { comparisons });
        }
        let categories = script.categories.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        ScriptedBackend { by_review_text, failing_texts, by_description, categories, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn product(&self, prompt: &str) -> Result<&ProductAnswers, GatewayError> {
        let description = tagged(prompt, "seller_description").unwrap_or_default();
        self.by_description
            .get(description)
            .ok_or_else(|| GatewayError::Transport("scripted backend: unknown seller description".into()))
    }

    fn compare(&self, product: &ProductAnswers, attribute: &str, value: &str) -> (ComparisonStatus, String) {
        product
            .comparisons
            .get(&join_key(attribute, value))
            .cloned()
            .unwrap_or((ComparisonStatus::Missing, String::new()))
    }

    fn category(&self, attribute: &str) -> String {
        let (key, _) = join_key(attribute, "");
        self.categories.get(&key).cloned().unwrap_or_else(|| FALLBACK_CATEGORY.to_string())
    }

    fn findings(&self, product: &ProductAnswers, rows: Vec<(String, String, String)>) -> Value {
        // One finding per (key, value); review ids appended in order.
        let mut order: Vec<(String, String)> = Vec::new();
        let mut grouped: HashMap<(String, String), Finding> = HashMap::new();
        for (review_id, attribute, value) in rows {
            let (status, justification) = self.compare(product, &attribute, &value);
            let id = join_key(&attribute, &value);
            let entry = grouped.entry(id.clone()).or_insert_with(|| {
                order.push(id.clone());
                Finding { attribute, value, status, justification, review_ids: Vec::new() }
            });
            if !entry.review_ids.contains(&review_id) {
                entry.review_ids.push(review_id);
            }
        }
        let findings: Vec<Value> = order
            .iter()
            .map(|id| {
                let f = &grouped[id];
                json!({
                    "attribute": f.attribute,
                    "value": f.value,
                    "status": f.status.label(),
                    "category": self.category(&f.attribute),
                    "justification": f.justification,
                    "review_ids": f.review_ids,
                })
            })
            .collect();
        json!({ "findings": findings })
    }

    fn answer(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let prompt = &request.user_prompt;

        if let Some(block) = tagged(prompt, "extracted_attributes") {
            let product = self.product(prompt)?;
            let rows = json_lines(block)
                .iter()
                .map(|r| (field(r, "review_id"), field(r, "attribute"), field(r, "value")))
                .collect();
            return Ok(self.findings(product, rows).to_string());
        }

        if let Some(block) = tagged(prompt, "attribute_keys") {
            let groups: Vec<Value> = block
                .lines()
                .map(str::trim)
                .filter(|k| !k.is_empty())
                .map(|k| json!({"attribute": k, "category": self.category(k)}))
                .collect();
            return Ok(json!({ "groups": groups }).to_string());
        }

        if let Some(block) = tagged(prompt, "reviews") {
            let product = self.product(prompt)?;
            let mut rows = Vec::new();
            for review in json_lines(block) {
                let text = field(&review, "text");
                if let Some((_, pairs)) = self.by_review_text.get(text.trim()) {
                    let review_id = field(&review, "review_id");
                    rows.extend(pairs.iter().map(|p| (review_id.clone(), p.attribute.clone(), p.value.clone())));
                }
            }
            return Ok(self.findings(product, rows).to_string());
        }

        if let Some(block) = tagged(prompt, "attributes") {
            let product = self.product(prompt)?;
            let results: Vec<Value> = json_lines(block)
                .iter()
                .map(|row| {
                    let (attribute, value) = (field(row, "attribute"), field(row, "value"));
                    let (status, justification) = self.compare(product, &attribute, &value);
                    json!({
                        "attribute": attribute,
                        "value": value,
                        "status": status.label(),
                        "justification": justification,
                    })
                })
                .collect();
            return Ok(json!({ "results": results }).to_string());
        }

        if let Some(text) = tagged(prompt, "review") {
            if self.failing_texts.contains(text) {
                return Err(GatewayError::Transport("scripted failure".into()));
            }
            let pairs = self.by_review_text.get(text).map(|(_, pairs)| pairs.clone()).unwrap_or_default();
            return Ok(json!({ "attributes": pairs }).to_string());
        }

        Err(GatewayError::Transport("scripted backend: unrecognized prompt".into()))
    }
}

impl Gateway for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.answer(request)?;
        Ok(ChatResponse { text, model: request.model.clone(), latency_ms: 0 })
    }
}
