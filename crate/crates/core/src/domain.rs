//! Shared data model: dataset records, attribute keys, the comparison status
//! taxonomy and the structured report, plus canonical JSON serialization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

/// Category used whenever a key has no assignment.
pub const FALLBACK_CATEGORY: &str = "Other";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("attribute key is empty after trimming")]
    EmptyKey,
    #[error("unknown comparison status label {0:?}")]
    UnknownStatus(String),
    #[error("invalid product record {product_id:?}: {reason}")]
    InvalidRecord { product_id: String, reason: String },
    #[error("failed to read dataset: {0}")]
    Io(String),
    #[error("dataset is not valid JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub category: String,
    pub seller_description: String,
    #[serde(default)]
    pub reviews: Vec<Review>,
}

impl ProductRecord {
    pub fn validate(&self) -> Result<(), DomainError> {
        let invalid = |reason: String| DomainError::InvalidRecord { product_id: self.product_id.clone(), reason };
        if self.seller_description.trim().is_empty() {
            return Err(invalid("seller_description is empty".into()));
        }
        let mut seen = HashSet::new();
        for review in &self.reviews {
            if !seen.insert(review.review_id.as_str()) {
                return Err(invalid(format!("duplicate review_id {:?}", review.review_id)));
            }
            if review.text.trim().is_empty() {
                return Err(invalid(format!("review {:?} has empty text", review.review_id)));
            }
            if let Some(rating) = review.rating {
                if !(1..=5).contains(&rating) {
                    return Err(invalid(format!("review {:?} has rating {rating} outside 1..=5", review.review_id)));
                }
            }
        }
        Ok(())
    }

    pub fn review(&self, review_id: &str) -> Option<&Review> {
        self.reviews.iter().find(|r| r.review_id == review_id)
    }
}

/// Parses and validates a dataset: a JSON array of product records.
pub fn parse_dataset(json: &str) -> Result<Vec<ProductRecord>, DomainError> {
    let products: Vec<ProductRecord> = serde_json::from_str(json).map_err(|e| DomainError::Json(e.to_string()))?;
    let mut ids = HashSet::new();
    for product in &products {
        product.validate()?;
        if !ids.insert(product.product_id.as_str()) {
            return Err(DomainError::InvalidRecord {
                product_id: product.product_id.clone(),
                reason: "duplicate product_id in dataset".into(),
            });
        }
    }
    Ok(products)
}

pub fn load_dataset(path: &Path) -> Result<Vec<ProductRecord>, DomainError> {
    let text = std::fs::read_to_string(path).map_err(|e| DomainError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text)
}

/// Normalized attribute name: ASCII-folded, lowercase, words joined by
/// single underscores.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeKey(String);

impl AttributeKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AttributeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for AttributeKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AttributeKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_key(&raw).map_err(serde::de::Error::custom)
    }
}

/// Normalizes a raw attribute name.
///
/// The raw string is transliterated to ASCII and lowercased; every run of
/// characters that is not an ASCII letter or digit (whitespace, hyphens,
/// dashes, underscores, punctuation) becomes one underscore, and leading or
/// trailing separators are dropped. The result is idempotent.
pub fn normalize_key(raw: &str) -> Result<AttributeKey, DomainError> {
    let folded = deunicode::deunicode(raw.trim());
    let mut out = String::with_capacity(folded.len());
    let mut pending_sep = false;
    for c in folded.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        return Err(DomainError::EmptyKey);
    }
    Ok(AttributeKey(out))
}

/// Comparison form of an attribute value: trimmed, lowercase, inner
/// whitespace collapsed to single spaces.
pub fn normalize_value(value: &str) -> String {
    value.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Relation of a review attribute to the seller description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComparisonStatus {
    Missing,
    Contradictory,
    PartiallyMatching,
    Matching,
}

impl ComparisonStatus {
    /// Report order: the three actionable statuses first, then `Matching`.
    pub const ALL: [ComparisonStatus; 4] = [
        ComparisonStatus::Missing,
        ComparisonStatus::Contradictory,
        ComparisonStatus::PartiallyMatching,
        ComparisonStatus::Matching,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ComparisonStatus::Missing => "Missing",
            ComparisonStatus::Contradictory => "Contradictory",
            ComparisonStatus::PartiallyMatching => "Partially-matching",
            ComparisonStatus::Matching => "Matching",
        }
    }

    pub fn is_actionable(self) -> bool {
        self != ComparisonStatus::Matching
    }
}

impl fmt::Display for ComparisonStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Case-insensitive parse over the closed status vocabulary.
pub fn parse_status(label: &str) -> Result<ComparisonStatus, DomainError> {
    match label.trim().to_ascii_lowercase().as_str() {
        "missing" => Ok(ComparisonStatus::Missing),
        "contradictory" => Ok(ComparisonStatus::Contradictory),
        "matching" => Ok(ComparisonStatus::Matching),
        "partially-matching" | "partially matching" | "partial" => Ok(ComparisonStatus::PartiallyMatching),
        _ => Err(DomainError::UnknownStatus(label.to_string())),
    }
}

impl std::str::FromStr for ComparisonStatus {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_status(s)
    }
}

impl Serialize for ComparisonStatus {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for ComparisonStatus {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_status(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedAttribute {
    pub key: AttributeKey,
    pub value: String,
    pub review_id: String,
    pub raw_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparedAttribute {
    pub attribute: ExtractedAttribute,
    pub status: ComparisonStatus,
    #[serde(default)]
    pub justification: String,
}

/// Per-product mapping of attribute keys to broad category labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    pub mapping: BTreeMap<AttributeKey, String>,
}

impl CategoryAssignment {
    pub fn category_of(&self, key: &AttributeKey) -> &str {
        self.mapping.get(key).map(String::as_str).unwrap_or(FALLBACK_CATEGORY)
    }
}

/// All rows sharing one (key, status), merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Insight {
    pub key: AttributeKey,
    pub values: Vec<String>,
    pub status: ComparisonStatus,
    pub category: String,
    pub evidence: Vec<String>,
    pub justifications: Vec<String>,
    /// Number of compared rows folded into this insight.
    pub mentions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallStats {
    pub extraction_calls: u64,
    pub comparison_calls: u64,
    pub grouping_calls: u64,
    /// Single-prompt report calls made by the baseline and ablated modes.
    pub direct_calls: u64,
    pub cache_hits: u64,
    pub retries: u64,
}

impl CallStats {
    pub fn total_calls(&self) -> u64 {
        self.extraction_calls + self.comparison_calls + self.grouping_calls + self.direct_calls
    }

    pub fn absorb(&mut self, other: &CallStats) {
        self.extraction_calls += other.extraction_calls;
        self.comparison_calls += other.comparison_calls;
        self.grouping_calls += other.grouping_calls;
        self.direct_calls += other.direct_calls;
        self.cache_hits += other.cache_hits;
        self.retries += other.retries;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySection {
    pub category: String,
    pub insights: Vec<Insight>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusSection {
    pub status: ComparisonStatus,
    pub categories: Vec<CategorySection>,
}

/// Final per-product report. `sections` always holds the four statuses in
/// [`ComparisonStatus::ALL`] order; JSON objects are key-sorted, so the
/// ordered levels are arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredReport {
    pub product_id: String,
    pub sections: Vec<StatusSection>,
    #[serde(default)]
    pub call_stats: CallStats,
}

impl StructuredReport {
    pub fn empty(product_id: &str, call_stats: CallStats) -> Self {
        StructuredReport {
            product_id: product_id.to_string(),
            sections: ComparisonStatus::ALL
                .iter()
                .map(|&status| StatusSection { status, categories: Vec::new() })
                .collect(),
            call_stats,
        }
    }

    pub fn insights(&self) -> impl Iterator<Item = &Insight> {
        self.sections.iter().flat_map(|s| s.categories.iter()).flat_map(|c| c.insights.iter())
    }

    pub fn section(&self, status: ComparisonStatus) -> Option<&StatusSection> {
        self.sections.iter().find(|s| s.status == status)
    }
}

fn sort_value(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_value(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_value).collect()),
        other => other,
    }
}

/// Pretty-printed UTF-8 JSON with every object's keys sorted, newline
/// terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("domain types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&sort_value(value)).expect("JSON value renders");
    out.push('\n');
    out
}
