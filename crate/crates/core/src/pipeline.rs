//! Per-product orchestration of the three pipeline modes.
//!
//! Full mode runs extraction and then comparison for each review as one task
//! on a bounded worker pool, joins, makes one grouping call and builds the
//! report locally: `2R + 1` calls on a cold cache when every review yields
//! attributes. Ablated mode makes `R + 1` calls (extraction plus one direct
//! report prompt) and baseline mode a single call.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{ResponseCache, Usage};
use crate::comparison::compare_review;
use crate::direct::{build_ablated_prompt, build_baseline_prompt, parse_findings, DirectFindings};
use crate::domain::{
    to_canonical_json, CallStats, CategoryAssignment, ComparedAttribute, ExtractedAttribute, ProductRecord,
    StructuredReport,
};
use crate::extraction::extract_attributes;
use crate::gateway::{Gateway, RetryPolicy};
use crate::grouping::{collect_unique_keys, group_attributes};
use crate::prompts::{PromptError, PromptSet, PromptTemplate, BUILTIN_PROMPT_VERSION};
use crate::step::{FailedUnit, StepCaller, StepSpec};
use crate::structuring::{build_report, merge_insights, render_report, ReportFormat};

pub const DEFAULT_MODEL: &str = "gemini-2.0-flash";
pub const DEFAULT_WORKERS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    #[default]
    Full,
    Baseline,
    Ablated,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 3] = [PipelineMode::Full, PipelineMode::Baseline, PipelineMode::Ablated];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Full => "full",
            PipelineMode::Baseline => "baseline",
            PipelineMode::Ablated => "ablated",
        }
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(PipelineMode::Full),
            "baseline" => Ok(PipelineMode::Baseline),
            "ablated" => Ok(PipelineMode::Ablated),
            other => Err(format!("unknown mode {other:?} (expected full, baseline or ablated)")),
        }
    }
}

/// Model id per step. Distinct ids are allowed, e.g. a cheaper model for
/// grouping. `direct` serves the baseline and ablated report prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepModels {
    pub extraction: String,
    pub comparison: String,
    pub grouping: String,
    pub direct: String,
}

impl Default for StepModels {
    fn default() -> Self {
        StepModels {
            extraction: DEFAULT_MODEL.into(),
            comparison: DEFAULT_MODEL.into(),
            grouping: DEFAULT_MODEL.into(),
            direct: DEFAULT_MODEL.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepTemperatures {
    pub extraction: f64,
    pub comparison: f64,
    pub grouping: f64,
    pub direct: f64,
}

/// Pipeline settings. Contains no secrets; it is echoed into run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub models: StepModels,
    pub temperatures: StepTemperatures,
    pub workers: usize,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    pub prompt_version: String,
    /// Directory of template overrides; built-in templates otherwise.
    pub prompt_dir: Option<PathBuf>,
    pub mode: PipelineMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            models: StepModels::default(),
            temperatures: StepTemperatures::default(),
            workers: DEFAULT_WORKERS,
            retry: RetryPolicy::default(),
            cache_dir: None,
            prompt_version: BUILTIN_PROMPT_VERSION.into(),
            prompt_dir: None,
            mode: PipelineMode::Full,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("writing run outputs to {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("reading run outputs from {path}: {reason}")]
    Load { path: String, reason: String },
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.workers < 1 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        self.retry.validate().map_err(PipelineError::Config)?;
        let models = [
            ("extraction", &self.models.extraction),
            ("comparison", &self.models.comparison),
            ("grouping", &self.models.grouping),
            ("direct", &self.models.direct),
        ];
        for (step, model) in models {
            if model.trim().is_empty() {
                return Err(PipelineError::Config(format!("models.{step} is empty")));
            }
        }
        let t = &self.temperatures;
        for (step, value) in
            [("extraction", t.extraction), ("comparison", t.comparison), ("grouping", t.grouping), ("direct", t.direct)]
        {
            if !(0.0..=1.0).contains(&value) {
                return Err(PipelineError::Config(format!("temperatures.{step} must be within [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn prompts(&self) -> Result<PromptSet, PipelineError> {
        Ok(match &self.prompt_dir {
            Some(dir) => PromptSet::load_dir(dir, &self.prompt_version)?,
            None => PromptSet::builtin().with_version(&self.prompt_version),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub mode: PipelineMode,
    pub report: StructuredReport,
    /// Attributes produced by extraction (or, in baseline mode, the
    /// attribute-value pairs the single prompt reported).
    pub extracted: Vec<ExtractedAttribute>,
    /// Review ids whose unit failed; the product id when a product-level call
    /// (grouping, or the single direct prompt) failed.
    pub failed_units: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl PipelineResult {
    pub fn is_partial(&self) -> bool {
        !self.failed_units.is_empty()
    }
}

/// Runs `task(i)` for `i in 0..n` on at most `workers` threads; results come
/// back in index order regardless of scheduling.
pub fn run_bounded<T, F>(n: usize, workers: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let out = task(i);
                *slots[i].lock().expect("result slot poisoned") = Some(out);
            });
        }
    });
    slots.into_iter().map(|slot| slot.into_inner().expect("result slot poisoned").expect("every index ran")).collect()
}

#[derive(Default)]
struct ReviewOutcome {
    extracted: Vec<ExtractedAttribute>,
    compared: Vec<ComparedAttribute>,
    extraction: Usage,
    comparison: Usage,
    diagnostics: Vec<String>,
    failure: Option<FailedUnit>,
}

/// A configured pipeline bound to a gateway. Cheap to share across threads.
pub struct Pipeline<'a> {
    config: PipelineConfig,
    prompts: PromptSet,
    gateway: &'a dyn Gateway,
    cache: Option<ResponseCache>,
}

impl<'a> Pipeline<'a> {
    pub fn new(config: PipelineConfig, gateway: &'a dyn Gateway) -> Result<Self, PipelineError> {
        config.validate()?;
        let prompts = config.prompts()?;
        let cache = config.cache_dir.as_ref().map(ResponseCache::new);
        Ok(Pipeline { config, prompts, gateway, cache })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    fn caller(&self) -> StepCaller<'_> {
        StepCaller::new(self.gateway, &self.config.retry).with_cache(self.cache.as_ref())
    }

    fn spec<'s>(&'s self, template: &'s PromptTemplate, model: &'s str, temperature: f64) -> StepSpec<'s> {
        StepSpec { template, model, temperature, prompt_version: &self.prompts.version }
    }

    pub fn extraction_spec(&self) -> StepSpec<'_> {
        self.spec(&self.prompts.extraction, &self.config.models.extraction, self.config.temperatures.extraction)
    }

    pub fn comparison_spec(&self) -> StepSpec<'_> {
        self.spec(&self.prompts.comparison, &self.config.models.comparison, self.config.temperatures.comparison)
    }

    pub fn grouping_spec(&self) -> StepSpec<'_> {
        self.spec(&self.prompts.grouping, &self.config.models.grouping, self.config.temperatures.grouping)
    }

    pub fn baseline_spec(&self) -> StepSpec<'_> {
        self.spec(&self.prompts.baseline, &self.config.models.direct, self.config.temperatures.direct)
    }

    pub fn ablated_spec(&self) -> StepSpec<'_> {
        self.spec(&self.prompts.ablated, &self.config.models.direct, self.config.temperatures.direct)
    }

    /// Runs the configured mode.
    pub fn run(&self, product: &ProductRecord) -> PipelineResult {
        match self.config.mode {
            PipelineMode::Full => self.run_full(product),
            PipelineMode::Baseline => self.run_baseline(product),
            PipelineMode::Ablated => self.run_ablated(product),
        }
    }

    /// Runs several products, `parallel` at a time, each with its own
    /// bounded review pool. Results are in input order.
    pub fn run_many(&self, products: &[ProductRecord], parallel: usize) -> Vec<PipelineResult> {
        run_bounded(products.len(), parallel, |i| self.run(&products[i]))
    }

    fn review_tasks(&self, product: &ProductRecord, compare: bool) -> Vec<ReviewOutcome> {
        let caller = self.caller();
        let extraction = self.extraction_spec();
        let comparison = self.comparison_spec();
        run_bounded(product.reviews.len(), self.config.workers, |i| {
            let review = &product.reviews[i];
            let mut out = ReviewOutcome::default();
            match extract_attributes(
                review,
                &product.title,
                &extraction,
                &caller,
                &mut out.extraction,
                &mut out.diagnostics,
            ) {
                Ok(attrs) => out.extracted = attrs,
                Err(failure) => {
                    out.failure = Some(failure);
                    return out;
                }
            }
            if compare {
                match compare_review(
                    &out.extracted,
                    &product.seller_description,
                    &comparison,
                    &caller,
                    &mut out.comparison,
                    &mut out.diagnostics,
                ) {
                    Ok(rows) => out.compared = rows,
                    Err(failure) => out.failure = Some(failure),
                }
            }
            out
        })
    }

    fn collect(
        outcomes: Vec<ReviewOutcome>,
        stats: &mut CallStats,
        failed_units: &mut Vec<String>,
        diagnostics: &mut Vec<String>,
    ) -> (Vec<ExtractedAttribute>, Vec<ComparedAttribute>) {
        let mut extracted = Vec::new();
        let mut compared = Vec::new();
        for outcome in outcomes {
            stats.extraction_calls += outcome.extraction.calls;
            stats.comparison_calls += outcome.comparison.calls;
            stats.cache_hits += outcome.extraction.cache_hits + outcome.comparison.cache_hits;
            stats.retries += outcome.extraction.retries + outcome.comparison.retries;
            diagnostics.extend(outcome.diagnostics);
            if let Some(failure) = outcome.failure {
                diagnostics.push(failure.to_string());
                failed_units.push(failure.unit_id);
            }
            extracted.extend(outcome.extracted);
            compared.extend(outcome.compared);
        }
        (extracted, compared)
    }

    fn add_usage(stats: &mut CallStats, usage: Usage) {
        stats.cache_hits += usage.cache_hits;
        stats.retries += usage.retries;
    }

    pub fn run_full(&self, product: &ProductRecord) -> PipelineResult {
        let mut stats = CallStats::default();
        let mut failed_units = Vec::new();
        let mut diagnostics = Vec::new();

        let outcomes = self.review_tasks(product, true);
        let (extracted, compared) = Self::collect(outcomes, &mut stats, &mut failed_units, &mut diagnostics);

        // Join point: grouping sees every key from every review.
        let keys = collect_unique_keys(&compared);
        let mut usage = Usage::default();
        let categories = match group_attributes(
            &keys,
            &product.product_id,
            &self.grouping_spec(),
            &self.caller(),
            &mut usage,
            &mut diagnostics,
        ) {
            Ok(categories) => categories,
            Err(failure) => {
                diagnostics.push(format!("{failure}; all keys placed under the fallback category"));
                failed_units.push(failure.unit_id);
                CategoryAssignment::default()
            }
        };
        stats.grouping_calls += usage.calls;
        Self::add_usage(&mut stats, usage);

        let report = build_report(&merge_insights(&compared), &categories, &product.product_id, stats);
        PipelineResult { mode: PipelineMode::Full, report, extracted, failed_units, diagnostics }
    }

    #[allow(clippy::too_many_arguments)]
    fn direct_result(
        &self,
        product: &ProductRecord,
        mode: PipelineMode,
        outcome: Result<DirectFindings, FailedUnit>,
        stats: CallStats,
        mut failed_units: Vec<String>,
        mut diagnostics: Vec<String>,
        extracted: Option<Vec<ExtractedAttribute>>,
    ) -> PipelineResult {
        let findings = match outcome {
            Ok(findings) => findings,
            Err(failure) => {
                diagnostics.push(format!("{failure}; report left empty"));
                failed_units.push(failure.unit_id);
                DirectFindings::default()
            }
        };
        diagnostics.extend(findings.diagnostics);
        let extracted = extracted.unwrap_or_else(|| findings.rows.iter().map(|r| r.attribute.clone()).collect());
        let report = build_report(&merge_insights(&findings.rows), &findings.categories, &product.product_id, stats);
        PipelineResult { mode, report, extracted, failed_units, diagnostics }
    }

    /// One end-to-end prompt over all reviews and the description.
    pub fn run_baseline(&self, product: &ProductRecord) -> PipelineResult {
        let mut stats = CallStats::default();
        let mut diagnostics = Vec::new();
        let mut usage = Usage::default();
        let request = build_baseline_prompt(product, &self.baseline_spec());
        let outcome =
            self.caller().call(&request, &mut usage, &mut diagnostics, |text| parse_findings(text, product)).map_err(
                |error| FailedUnit { unit_id: product.product_id.clone(), step: crate::step::Step::Direct, error },
            );
        stats.direct_calls += usage.calls;
        Self::add_usage(&mut stats, usage);
        self.direct_result(product, PipelineMode::Baseline, outcome, stats, Vec::new(), diagnostics, None)
    }

    /// Extraction per review, then one direct prompt over the extracted
    /// attributes. No attributes at all means no direct call.
    pub fn run_ablated(&self, product: &ProductRecord) -> PipelineResult {
        let mut stats = CallStats::default();
        let mut failed_units = Vec::new();
        let mut diagnostics = Vec::new();

        let outcomes = self.review_tasks(product, false);
        let (extracted, _) = Self::collect(outcomes, &mut stats, &mut failed_units, &mut diagnostics);

        let outcome = if extracted.is_empty() {
            Ok(DirectFindings::default())
        } else {
            let mut usage = Usage::default();
            let request = build_ablated_prompt(product, &extracted, &self.ablated_spec());
            let outcome = self
                .caller()
                .call(&request, &mut usage, &mut diagnostics, |text| parse_findings(text, product))
                .map_err(|error| FailedUnit {
                    unit_id: product.product_id.clone(),
                    step: crate::step::Step::Direct,
                    error,
                });
            stats.direct_calls += usage.calls;
            Self::add_usage(&mut stats, usage);
            outcome
        };
        self.direct_result(product, PipelineMode::Ablated, outcome, stats, failed_units, diagnostics, Some(extracted))
    }
}

pub fn run_full(
    product: &ProductRecord,
    config: &PipelineConfig,
    gateway: &dyn Gateway,
) -> Result<PipelineResult, PipelineError> {
    Ok(Pipeline::new(PipelineConfig { mode: PipelineMode::Full, ..config.clone() }, gateway)?.run_full(product))
}

pub fn run_baseline(
    product: &ProductRecord,
    config: &PipelineConfig,
    gateway: &dyn Gateway,
) -> Result<PipelineResult, PipelineError> {
    Ok(Pipeline::new(PipelineConfig { mode: PipelineMode::Baseline, ..config.clone() }, gateway)?.run_baseline(product))
}

pub fn run_ablated(
    product: &ProductRecord,
    config: &PipelineConfig,
    gateway: &dyn Gateway,
) -> Result<PipelineResult, PipelineError> {
    Ok(Pipeline::new(PipelineConfig { mode: PipelineMode::Ablated, ..config.clone() }, gateway)?.run_ablated(product))
}

/// `manifest.json` in a product's run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub product_id: String,
    pub category: String,
    pub mode: PipelineMode,
    pub config: PipelineConfig,
    pub call_stats: CallStats,
    pub failed_units: Vec<String>,
    pub diagnostics: Vec<String>,
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MARKDOWN: &str = "report.md";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const EXTRACTIONS_JSON: &str = "extractions.json";

/// Writes `<out_dir>/<product_id>/` with the requested report formats, the
/// run manifest and the extracted attributes. Returns the product directory.
pub fn write_run_outputs(
    out_dir: &Path,
    product: &ProductRecord,
    config: &PipelineConfig,
    result: &PipelineResult,
    formats: &[ReportFormat],
) -> Result<PathBuf, PipelineError> {
    let dir = out_dir.join(&product.product_id);
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
    };
    std::fs::create_dir_all(&dir).map_err(|source| PipelineError::Io { path: dir.display().to_string(), source })?;
    for format in formats {
        match format {
            ReportFormat::Json => write(REPORT_JSON, render_report(&result.report, ReportFormat::Json))?,
            ReportFormat::Markdown => write(REPORT_MARKDOWN, render_report(&result.report, ReportFormat::Markdown))?,
        }
    }
    let manifest = RunManifest {
        product_id: product.product_id.clone(),
        category: product.category.clone(),
        mode: result.mode,
        config: PipelineConfig { mode: result.mode, ..config.clone() },
        call_stats: result.report.call_stats.clone(),
        failed_units: result.failed_units.clone(),
        diagnostics: result.diagnostics.clone(),
    };
    write(MANIFEST_JSON, to_canonical_json(&manifest))?;
    write(EXTRACTIONS_JSON, to_canonical_json(&result.extracted))?;
    Ok(dir)
}

/// A run read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub result: PipelineResult,
}

/// Reads every product directory (one holding a `manifest.json`) under
/// `run_dir`, sorted by product id.
pub fn load_run_outputs(run_dir: &Path) -> Result<Vec<LoadedRun>, PipelineError> {
    let load_err = |path: &Path, reason: String| PipelineError::Load { path: path.display().to_string(), reason };
    let mut runs = Vec::new();
    let entries = std::fs::read_dir(run_dir).map_err(|e| load_err(run_dir, e.to_string()))?;
    for entry in entries {
        let dir = entry.map_err(|e| load_err(run_dir, e.to_string()))?.path();
        let manifest_path = dir.join(MANIFEST_JSON);
        if !manifest_path.is_file() {
            continue;
        }
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| load_err(&path, e.to_string()))
        };
        let manifest: RunManifest =
            serde_json::from_str(&read(MANIFEST_JSON)?).map_err(|e| load_err(&manifest_path, e.to_string()))?;
        let mut report: StructuredReport = match read(REPORT_JSON) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| load_err(&dir.join(REPORT_JSON), e.to_string()))?,
            Err(_) => StructuredReport::empty(&manifest.product_id, CallStats::default()),
        };
        report.call_stats = manifest.call_stats.clone();
        let extracted: Vec<ExtractedAttribute> = match read(EXTRACTIONS_JSON) {
            Ok(text) => {
                serde_json::from_str(&text).map_err(|e| load_err(&dir.join(EXTRACTIONS_JSON), e.to_string()))?
            }
            Err(_) => Vec::new(),
        };
        let result = PipelineResult {
            mode: manifest.mode,
            report,
            extracted,
            failed_units: manifest.failed_units.clone(),
            diagnostics: manifest.diagnostics.clone(),
        };
        runs.push(LoadedRun { manifest, result });
    }
    runs.sort_by(|a, b| a.manifest.product_id.cmp(&b.manifest.product_id));
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;
    use std::time::Duration;

    #[test]
    fn bounded_pool_respects_limit_and_order() {
        let in_flight = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let out = run_bounded(20, 3, |i| {
            let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(2));
            in_flight.fetch_sub(1, Ordering::SeqCst);
            i * 10
        });
        assert_eq!(out, (0..20).map(|i| i * 10).collect::<Vec<_>>());
        assert!(peak.load(Ordering::SeqCst) <= 3);
        assert!(run_bounded(0, 4, |i| i).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(PipelineConfig { workers: 0, ..Default::default() }.validate().is_err());
        let mut bad = PipelineConfig::default();
        bad.models.grouping = " ".into();
        assert!(bad.validate().is_err());
        let mut hot = PipelineConfig::default();
        hot.temperatures.direct = 1.5;
        assert!(hot.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let config: PipelineConfig = serde_json::from_str(
            r#"{"models": {"grouping": "gemini-2.0-flash-lite"}, "workers": 2, "mode": "ablated"}"#,
        )
        .unwrap();
        assert_eq!(config.models.extraction, DEFAULT_MODEL);
        assert_eq!(config.models.grouping, "gemini-2.0-flash-lite");
        assert_eq!(config.mode, PipelineMode::Ablated);
        let back: PipelineConfig = serde_json::from_str(&to_canonical_json(&config)).unwrap();
        assert_eq!(back, config);
    }
}
