use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use praise_core::domain::{load_dataset, ProductRecord};
use praise_core::gateway::{Gateway, RecordingBackend};
use praise_core::pipeline::{write_run_outputs, Pipeline, PipelineConfig, PipelineMode, PipelineResult};
use praise_core::ReportFormat;

use crate::{backend, FormatArg, PipelineArgs, RecordArgs, RunArgs};

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Fatal,
    Partial,
}

impl From<Outcome> for ExitCode {
    fn from(outcome: Outcome) -> Self {
        ExitCode::from(match outcome {
            Outcome::Success => 0,
            Outcome::Fatal => 1,
            Outcome::Partial => 2,
        })
    }
}

fn load_config(args: &PipelineArgs, mode: Option<PipelineMode>) -> Result<PipelineConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(mode) = mode {
        config.mode = mode;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(dir) = &args.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    config.validate()?;
    if args.parallel_products < 1 {
        bail!("--parallel-products must be at least 1");
    }
    Ok(config)
}

fn load_products(args: &PipelineArgs) -> Result<Vec<ProductRecord>> {
    let products = load_dataset(&args.dataset)?;
    match &args.product {
        None => Ok(products),
        Some(id) => {
            let selected: Vec<_> = products.into_iter().filter(|p| &p.product_id == id).collect();
            if selected.is_empty() {
                bail!("product {id:?} is not in {}", args.dataset.display());
            }
            Ok(selected)
        }
    }
}

fn formats(format: FormatArg) -> Vec<ReportFormat> {
    match format {
        FormatArg::Json => vec![ReportFormat::Json],
        FormatArg::Markdown => vec![ReportFormat::Markdown],
        FormatArg::Both => vec![ReportFormat::Json, ReportFormat::Markdown],
    }
}

fn summarize(result: &PipelineResult) -> String {
    let stats = &result.report.call_stats;
    format!(
        "{} [{}] calls={} cache_hits={} retries={} insights={} failed_units={}",
        result.report.product_id,
        result.mode.as_str(),
        stats.total_calls(),
        stats.cache_hits,
        stats.retries,
        result.report.insights().count(),
        result.failed_units.len(),
    )
}

fn report_failures(result: &PipelineResult) -> bool {
    for unit in &result.failed_units {
        eprintln!("{}: unit {unit} failed", result.report.product_id);
    }
    for line in &result.diagnostics {
        log::warn!("{}: {line}", result.report.product_id);
    }
    result.is_partial()
}

pub fn cmd_run(args: RunArgs) -> Result<Outcome> {
    let config = load_config(&args.pipeline, args.mode.map(Into::into))?;
    let products = load_products(&args.pipeline)?;
    let gateway = backend::build(&args.pipeline, &products)?;
    let pipeline = Pipeline::new(config.clone(), gateway.as_ref())?;
    let results = pipeline.run_many(&products, args.pipeline.parallel_products);

    let formats = formats(args.format);
    let mut partial = false;
    for (product, result) in products.iter().zip(&results) {
        let dir = write_run_outputs(&args.out, product, &config, result, &formats)?;
        println!("{} -> {}", summarize(result), dir.display());
        partial |= report_failures(result);
    }
    Ok(if partial { Outcome::Partial } else { Outcome::Success })
}

pub fn cmd_record_fixtures(args: RecordArgs) -> Result<Outcome> {
    let modes: Vec<PipelineMode> =
        if args.mode.is_empty() { PipelineMode::ALL.to_vec() } else { args.mode.iter().map(|&m| m.into()).collect() };
    let base = load_config(&args.pipeline, None)?;
    let products = load_products(&args.pipeline)?;
    let upstream = backend::build(&args.pipeline, &products)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let recorder = RecordingBackend::new(upstream, &args.out);

    let mut partial = false;
    for mode in modes {
        let config = PipelineConfig { mode, ..base.clone() };
        let pipeline = Pipeline::new(config, &recorder as &dyn Gateway)?;
        for result in pipeline.run_many(&products, args.pipeline.parallel_products) {
            println!("{}", summarize(&result));
            partial |= report_failures(&result);
        }
    }
    println!("recorded {} fixtures into {}", recorder.recorded(), args.out.display());
    Ok(if partial { Outcome::Partial } else { Outcome::Success })
}
