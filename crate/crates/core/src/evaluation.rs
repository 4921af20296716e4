//! Evaluation harness: the error-annotation rubric and its tallies,
//! attribute-selection precision/recall/F1 against gold sets, and the
//! full-vs-baseline-vs-ablated comparison table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{normalize_key, normalize_value, AttributeKey, ExtractedAttribute};
use crate::pipeline::{PipelineMode, PipelineResult};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("results cover different products: {0:?}")]
    ProductMismatch(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStep {
    Extraction,
    Comparison,
    Grouping,
}

impl EvalStep {
    /// Closed rubric of error categories for this step.
    pub fn categories(self) -> &'static [&'static str] {
        match self {
            EvalStep::Extraction => &[
                "incorrect_extraction",
                "opinion_not_filtered",
                "irrelevant_information",
                "omitted_attribute",
                "incorrect_normalization",
                "other",
            ],
            EvalStep::Comparison => &[
                "misclassified_missing",
                "misclassified_matching",
                "misclassified_contradictory",
                "misclassified_partial",
                "invalid_justification",
                "other",
            ],
            EvalStep::Grouping => &[
                "incorrect_category_naming",
                "missing_category",
                "incorrect_splitting",
                "incorrect_assignment",
                "other",
            ],
        }
    }
}

impl fmt::Display for EvalStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalStep::Extraction => "extraction",
            EvalStep::Comparison => "comparison",
            EvalStep::Grouping => "grouping",
        })
    }
}

/// One error found by an annotator; each counts as one point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAnnotation {
    pub product_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_id: Option<String>,
    pub step: EvalStep,
    pub error_category: String,
    #[serde(default)]
    pub note: String,
    /// Pipeline mode whose output was annotated (full when absent).
    #[serde(default)]
    pub mode: PipelineMode,
}

impl ErrorAnnotation {
    pub fn validate(&self) -> Result<(), String> {
        if self.step.categories().contains(&self.error_category.as_str()) {
            Ok(())
        } else {
            Err(format!(
                "error_category {:?} is not in the {} rubric {:?}",
                self.error_category,
                self.step,
                self.step.categories()
            ))
        }
    }
}

/// Parses JSON lines (blank lines skipped), validating each against the
/// rubric. Errors carry 1-based line numbers.
pub fn parse_annotations(jsonl: &str) -> Result<Vec<ErrorAnnotation>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let annotation: ErrorAnnotation =
            serde_json::from_str(line).map_err(|e| EvalError::Schema { line: i + 1, reason: e.to_string() })?;
        annotation.validate().map_err(|reason| EvalError::Schema { line: i + 1, reason })?;
        out.push(annotation);
    }
    Ok(out)
}

/// Multiset count per (step, category), sorted.
pub fn aggregate_errors(annotations: &[ErrorAnnotation]) -> Result<BTreeMap<(EvalStep, String), usize>, EvalError> {
    let mut counts = BTreeMap::new();
    for (i, annotation) in annotations.iter().enumerate() {
        annotation.validate().map_err(|reason| EvalError::Schema { line: i + 1, reason })?;
        *counts.entry((annotation.step, annotation.error_category.clone())).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean `2PR / (P + R)`, zero when both are zero.
pub fn f1(precision: f64, recall: f64) -> Result<f64, EvalError> {
    for (name, value) in [("precision", precision), ("recall", recall)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(EvalError::OutOfRange { name, value });
        }
    }
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Rounds half away from zero for non-negative inputs. A 1e-9 nudge keeps
/// values like 0.125 (stored slightly below) on the upper side.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    ((value * scale) + 0.5 + 1e-9).floor() / scale
}

/// Gold attribute pairs for one review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAttributeSet {
    pub product_id: String,
    pub review_id: String,
    pub gold: BTreeSet<(AttributeKey, String)>,
}

/// Key and value in the form used for matching.
pub fn match_pair(key: &AttributeKey, value: &str) -> (AttributeKey, String) {
    (key.clone(), normalize_value(value))
}

/// Raw counts behind precision and recall; they pool by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SelectionCounts {
    pub fn add(&mut self, other: SelectionCounts) {
        self.true_positives += other.true_positives;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    /// Precision is 0 with no predictions; recall is 1 with no gold pairs.
    pub fn metrics(&self) -> CategoryMetrics {
        let precision = if self.predicted == 0 { 0.0 } else { self.true_positives as f64 / self.predicted as f64 };
        let recall = if self.gold == 0 { 1.0 } else { self.true_positives as f64 / self.gold as f64 };
        let f1 = f1(precision, recall).expect("ratios lie in [0, 1]");
        CategoryMetrics { precision, recall, f1 }
    }
}

/// Exact set match on (normalized key, normalized value); duplicate
/// predictions count once.
pub fn selection_counts(predicted: &[ExtractedAttribute], gold: &GoldAttributeSet) -> SelectionCounts {
    let predicted: BTreeSet<(AttributeKey, String)> = predicted.iter().map(|a| match_pair(&a.key, &a.value)).collect();
    let gold_pairs: BTreeSet<(AttributeKey, String)> = gold.gold.iter().map(|(k, v)| match_pair(k, v)).collect();
    SelectionCounts {
        true_positives: predicted.intersection(&gold_pairs).count(),
        predicted: predicted.len(),
        gold: gold_pairs.len(),
    }
}

pub fn selection_metrics(predicted: &[ExtractedAttribute], gold: &GoldAttributeSet) -> CategoryMetrics {
    selection_counts(predicted, gold).metrics()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPair {
    pub attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldReview {
    pub review_id: String,
    #[serde(default)]
    pub gold: Vec<GoldPair>,
}

/// Gold file entry: per-review gold pairs for one product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldProduct {
    pub product_id: String,
    pub category: String,
    pub reviews: Vec<GoldReview>,
}

impl GoldProduct {
    pub fn sets(&self) -> Result<Vec<GoldAttributeSet>, EvalError> {
        self.reviews
            .iter()
            .map(|review| {
                let gold = review
                    .gold
                    .iter()
                    .map(|pair| {
                        normalize_key(&pair.attribute).map(|k| (k, pair.value.trim().to_string())).map_err(|e| {
                            EvalError::Invalid(format!("gold {}/{}: {e}", self.product_id, review.review_id))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(GoldAttributeSet { product_id: self.product_id.clone(), review_id: review.review_id.clone(), gold })
            })
            .collect()
    }
}

/// Accepts a JSON array of products or a single product object.
pub fn parse_gold(json: &str) -> Result<Vec<GoldProduct>, EvalError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| EvalError::Schema { line: e.line(), reason: e.to_string() })?;
    let parsed =
        if value.is_array() { serde_json::from_value(value) } else { serde_json::from_value(value).map(|p| vec![p]) };
    parsed.map_err(|e| EvalError::Schema { line: 1, reason: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub category: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<SelectionCounts>,
}

/// Pools counts over every review of every product in a category, then
/// computes precision, recall and F1 per category. Reviews without
/// predictions count as predicting nothing.
pub fn category_metrics(
    gold: &[GoldProduct],
    predictions: &HashMap<String, Vec<ExtractedAttribute>>,
) -> Result<Vec<MetricsRow>, EvalError> {
    let mut pooled: BTreeMap<String, SelectionCounts> = BTreeMap::new();
    for product in gold {
        let predicted = predictions.get(&product.product_id).map(Vec::as_slice).unwrap_or(&[]);
        for set in product.sets()? {
            let for_review: Vec<ExtractedAttribute> =
                predicted.iter().filter(|a| a.review_id == set.review_id).cloned().collect();
            pooled.entry(product.category.clone()).or_default().add(selection_counts(&for_review, &set));
        }
    }
    Ok(pooled
        .into_iter()
        .map(|(category, counts)| {
            let m = counts.metrics();
            MetricsRow { category, precision: m.precision, recall: m.recall, f1: m.f1, counts: Some(counts) }
        })
        .collect())
}

/// Input row for tabulating F1 from already-known precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub category: String,
    pub precision: f64,
    pub recall: f64,
}

pub fn metrics_from_pr(rows: &[PrecisionRecall]) -> Result<Vec<MetricsRow>, EvalError> {
    rows.iter()
        .map(|row| {
            Ok(MetricsRow {
                category: row.category.clone(),
                precision: row.precision,
                recall: row.recall,
                f1: f1(row.precision, row.recall)?,
                counts: None,
            })
        })
        .collect()
}

/// Aligned text table, two decimals (half-up), one row per category.
pub fn render_metrics_table(rows: &[MetricsRow]) -> String {
    let width = rows.iter().map(|r| r.category.len()).chain(["Category".len()]).max().unwrap_or(8);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | Precision | Recall | F1 Score", "Category");
    let _ = writeln!(out, "{}-+-----------+--------+---------", "-".repeat(width));
    for row in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>9.2} | {:>6.2} | {:>8.2}",
            row.category,
            round_half_up(row.precision, 2),
            round_half_up(row.recall, 2),
            round_half_up(row.f1, 2),
        );
    }
    out
}

pub fn render_error_counts(counts: &BTreeMap<(EvalStep, String), usize>) -> String {
    let width = counts.keys().map(|(_, c)| c.len()).chain(["category".len()]).max().unwrap_or(8);
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} | {:<width$} | count", "step", "category");
    for ((step, category), count) in counts {
        let _ = writeln!(out, "{:<10} | {:<width$} | {count:>5}", step.to_string(), category);
    }
    let total: usize = counts.values().sum();
    let _ = writeln!(out, "{:<10} | {:<width$} | {total:>5}", "total", "");
    out
}

/// Output-quality criteria of the mode comparison. Each is counted as
/// annotated errors, so lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Important product details lost (omitted attributes).
    RetainDetails,
    /// Subjective opinions left in.
    ExcludeOpinions,
    /// Non-product information included.
    ProductFocus,
    /// Wrong comparison status.
    Categorization,
}

impl Criterion {
    pub const ALL: [Criterion; 4] =
        [Criterion::RetainDetails, Criterion::ExcludeOpinions, Criterion::ProductFocus, Criterion::Categorization];

    pub fn of(annotation: &ErrorAnnotation) -> Option<Criterion> {
        match (annotation.step, annotation.error_category.as_str()) {
            (EvalStep::Extraction, "omitted_attribute") => Some(Criterion::RetainDetails),
            (EvalStep::Extraction, "opinion_not_filtered") => Some(Criterion::ExcludeOpinions),
            (EvalStep::Extraction, "irrelevant_information") => Some(Criterion::ProductFocus),
            (EvalStep::Comparison, c) if c.starts_with("misclassified_") => Some(Criterion::Categorization),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::RetainDetails => "retain important details",
            Criterion::ExcludeOpinions => "exclude subjective opinions",
            Criterion::ProductFocus => "stay product-specific",
            Criterion::Categorization => "categorize accurately",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub criterion: Criterion,
    pub full: usize,
    pub baseline: usize,
    pub ablated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub product_id: String,
    pub rows: Vec<CriterionRow>,
    /// Insights reported per mode: (full, baseline, ablated).
    pub insights: (usize, usize, usize),
    /// Actionable insights per mode: (full, baseline, ablated).
    pub actionable: (usize, usize, usize),
}

/// Error counts per criterion and mode for one product, from annotations
/// tagged with that product and mode.
pub fn compare_modes(
    full: &PipelineResult,
    baseline: &PipelineResult,
    ablated: &PipelineResult,
    annotations: &[ErrorAnnotation],
) -> Result<ModeComparison, EvalError> {
    let ids = [&full.report.product_id, &baseline.report.product_id, &ablated.report.product_id];
    if ids.iter().any(|id| *id != ids[0]) {
        return Err(EvalError::ProductMismatch(ids.iter().map(|s| s.to_string()).collect()));
    }
    let product_id = ids[0].clone();
    let mut counts: HashMap<(Criterion, PipelineMode), usize> = HashMap::new();
    for annotation in annotations.iter().filter(|a| a.product_id == product_id) {
        if let Some(criterion) = Criterion::of(annotation) {
            *counts.entry((criterion, annotation.mode)).or_insert(0) += 1;
        }
    }
    let count = |c, m| counts.get(&(c, m)).copied().unwrap_or(0);
    let rows = Criterion::ALL
        .iter()
        .map(|&c| CriterionRow {
            criterion: c,
            full: count(c, PipelineMode::Full),
            baseline: count(c, PipelineMode::Baseline),
            ablated: count(c, PipelineMode::Ablated),
        })
        .collect();
    let insights = |r: &PipelineResult| r.report.insights().count();
    let actionable = |r: &PipelineResult| r.report.insights().filter(|i| i.status.is_actionable()).count();
    Ok(ModeComparison {
        product_id,
        rows,
        insights: (insights(full), insights(baseline), insights(ablated)),
        actionable: (actionable(full), actionable(baseline), actionable(ablated)),
    })
}

pub fn render_mode_comparison(comparison: &ModeComparison) -> String {
    let width = Criterion::ALL.iter().map(|c| c.label().len()).max().unwrap_or(0).max("actionable insights".len());
    let mut out = String::new();
    let _ = writeln!(out, "product {} (error counts, lower is better)", comparison.product_id);
    let _ = writeln!(out, "{:<width$} | {:>4} | {:>8} | {:>7}", "criterion", "full", "baseline", "ablated");
    for row in &comparison.rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>4} | {:>8} | {:>7}",
            row.criterion.label(),
            row.full,
            row.baseline,
            row.ablated
        );
    }
    let (f, b, a) = comparison.insights;
    let _ = writeln!(out, "{:<width$} | {f:>4} | {b:>8} | {a:>7}", "reported insights");
    let (f, b, a) = comparison.actionable;
    let _ = writeln!(out, "{:<width$} | {f:>4} | {b:>8} | {a:>7}", "actionable insights");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CallStats, StructuredReport};
    use proptest::prelude::*;

    fn attr(key: &str, value: &str) -> ExtractedAttribute {
        ExtractedAttribute {
            key: normalize_key(key).unwrap(),
            value: value.into(),
            review_id: "r1".into(),
            raw_key: key.into(),
        }
    }

    fn gold(pairs: &[(&str, &str)]) -> GoldAttributeSet {
        GoldAttributeSet {
            product_id: "p".into(),
            review_id: "r1".into(),
            gold: pairs.iter().map(|(k, v)| (normalize_key(k).unwrap(), v.to_string())).collect(),
        }
    }

    #[test]
    fn f1_examples() {
        assert!((f1(0.72, 0.96).unwrap() - 0.822_857).abs() < 1e-6);
        assert_eq!(round_half_up(f1(0.72, 0.96).unwrap(), 2), 0.82);
        assert!((f1(0.23, 0.79).unwrap() - 0.356_275).abs() < 1e-6);
        assert_eq!(round_half_up(f1(0.23, 0.79).unwrap(), 2), 0.36);
        assert_eq!(f1(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(f1(1.2, 0.5), Err(EvalError::OutOfRange { name: "precision", .. })));
        assert!(matches!(f1(0.5, -0.1), Err(EvalError::OutOfRange { name: "recall", .. })));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(0.5571, 2), 0.56);
        assert_eq!(round_half_up(0.3549, 2), 0.35);
        assert_eq!(round_half_up(0.0, 2), 0.0);
    }

    #[test]
    fn selection_examples() {
        let perfect = selection_metrics(&[attr("color", "red")], &gold(&[("color", "red")]));
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));

        let half = selection_metrics(&[attr("color", "red"), attr("mood", "happy")], &gold(&[("color", "red")]));
        assert_eq!(half.precision, 0.5);
        assert_eq!(half.recall, 1.0);
        assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);

        let empty = selection_metrics(&[], &gold(&[]));
        assert_eq!((empty.precision, empty.recall, empty.f1), (0.0, 1.0, 0.0));

        let normalized = selection_metrics(&[attr("Colour", " Deep  Red ")], &gold(&[("colour", "deep red")]));
        assert_eq!(normalized.f1, 1.0);
    }

    #[test]
    fn annotation_tallies() {
        let text = r#"
{"product_id":"p","review_id":"r1","step":"extraction","error_category":"irrelevant_information"}
{"product_id":"p","review_id":"r2","step":"extraction","error_category":"irrelevant_information","note":"shipping"}
{"product_id":"p","step":"grouping","error_category":"incorrect_category_naming"}
"#;
        let annotations = parse_annotations(text).unwrap();
        let counts = aggregate_errors(&annotations).unwrap();
        let expected: BTreeMap<_, _> = [
            ((EvalStep::Extraction, "irrelevant_information".to_string()), 2),
            ((EvalStep::Grouping, "incorrect_category_naming".to_string()), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(counts, expected);
        assert!(aggregate_errors(&[]).unwrap().is_empty());
        assert!(render_error_counts(&counts).contains("total"));
    }

    #[test]
    fn invalid_annotations_report_line() {
        let text = "{\"product_id\":\"p\",\"step\":\"grouping\",\"error_category\":\"other\"}\n\
                    {\"product_id\":\"p\",\"step\":\"grouping\",\"error_category\":\"opinion_not_filtered\"}\n";
        assert!(matches!(parse_annotations(text), Err(EvalError::Schema { line: 2, .. })));
        assert!(matches!(parse_annotations("{bad"), Err(EvalError::Schema { line: 1, .. })));
    }

    fn result(product_id: &str, mode: PipelineMode) -> PipelineResult {
        PipelineResult {
            mode,
            report: StructuredReport::empty(product_id, CallStats::default()),
            extracted: Vec::new(),
            failed_units: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn annotation(mode: PipelineMode, step: EvalStep, category: &str) -> ErrorAnnotation {
        ErrorAnnotation {
            product_id: "p".into(),
            review_id: None,
            step,
            error_category: category.into(),
            note: String::new(),
            mode,
        }
    }

    #[test]
    fn mode_comparison_table() {
        use PipelineMode::*;
        let annotations = vec![
            annotation(Full, EvalStep::Extraction, "omitted_attribute"),
            annotation(Baseline, EvalStep::Extraction, "opinion_not_filtered"),
            annotation(Baseline, EvalStep::Extraction, "opinion_not_filtered"),
            annotation(Baseline, EvalStep::Comparison, "misclassified_missing"),
            annotation(Ablated, EvalStep::Extraction, "irrelevant_information"),
            annotation(Ablated, EvalStep::Comparison, "misclassified_partial"),
            annotation(Ablated, EvalStep::Grouping, "missing_category"),
        ];
        let table =
            compare_modes(&result("p", Full), &result("p", Baseline), &result("p", Ablated), &annotations).unwrap();
        assert_eq!(table.rows.len(), 4);
        let by = |c| table.rows.iter().find(|r| r.criterion == c).unwrap().clone();
        assert_eq!(
            by(Criterion::RetainDetails),
            CriterionRow { criterion: Criterion::RetainDetails, full: 1, baseline: 0, ablated: 0 }
        );
        assert_eq!(by(Criterion::ExcludeOpinions).baseline, 2);
        assert_eq!(by(Criterion::ProductFocus).ablated, 1);
        assert_eq!((by(Criterion::Categorization).baseline, by(Criterion::Categorization).ablated), (1, 1));
        assert!(render_mode_comparison(&table).contains("exclude subjective opinions"));

        let mismatch = compare_modes(&result("p", Full), &result("q", Baseline), &result("p", Ablated), &[]);
        assert!(matches!(mismatch, Err(EvalError::ProductMismatch(_))));
    }

    #[test]
    fn identical_results_give_identical_counts() {
        let same = result("p", PipelineMode::Full);
        let table = compare_modes(&same, &same, &same, &[]).unwrap();
        assert!(table.rows.iter().all(|r| r.full == r.baseline && r.baseline == r.ablated));
        assert_eq!(table.insights.0, table.insights.1);
    }

    #[test]
    fn pooled_category_metrics() {
        let gold_products = parse_gold(
            r#"[{"product_id":"p1","category":"Beauty","reviews":[
                    {"review_id":"r1","gold":[{"attribute":"scent","value":"lavender"},{"attribute":"volume","value":"50 ml"}]},
                    {"review_id":"r2","gold":[]}]},
                {"product_id":"p2","category":"Beauty","reviews":[
                    {"review_id":"r1","gold":[{"attribute":"color","value":"nude"}]}]}]"#,
        )
        .unwrap();
        let mut predictions = HashMap::new();
        predictions.insert("p1".to_string(), vec![attr("scent", "lavender"), attr("mood", "calm")]);
        let rows = category_metrics(&gold_products, &predictions).unwrap();
        assert_eq!(rows.len(), 1);
        // Pooled: TP 1, predicted 2, gold 3.
        assert_eq!(rows[0].counts, Some(SelectionCounts { true_positives: 1, predicted: 2, gold: 3 }));
        assert_eq!(rows[0].precision, 0.5);
        assert!((rows[0].recall - 1.0 / 3.0).abs() < 1e-12);
        assert!(render_metrics_table(&rows).contains("Beauty"));
    }

    proptest! {
        #[test]
        fn f1_symmetric_and_bounded(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let a = f1(p, r).unwrap();
            prop_assert_eq!(a, f1(r, p).unwrap());
            prop_assert!(a <= 2.0 * p.min(r) + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}
