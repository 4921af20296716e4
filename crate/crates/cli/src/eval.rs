use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use praise_core::evaluation::{
    aggregate_errors, category_metrics, compare_modes, metrics_from_pr, parse_annotations, parse_gold,
    render_error_counts, render_metrics_table, render_mode_comparison, ErrorAnnotation, PrecisionRecall,
};
use praise_core::pipeline::{load_run_outputs, LoadedRun, PipelineMode};
use serde_json::{json, Value};

use crate::run::Outcome;
use crate::EvalArgs;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn cmd_eval(args: EvalArgs) -> Result<Outcome> {
    let gold = match &args.gold {
        Some(path) => Some(parse_gold(&read(path)?).with_context(|| format!("in {}", path.display()))?),
        None => None,
    };
    let annotations: Vec<ErrorAnnotation> = match &args.annotations {
        Some(path) => parse_annotations(&read(path)?).with_context(|| format!("in {}", path.display()))?,
        None => Vec::new(),
    };
    let pr_rows = match &args.pr_table {
        Some(path) => {
            let rows: Vec<PrecisionRecall> =
                serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            Some(metrics_from_pr(&rows).with_context(|| format!("in {}", path.display()))?)
        }
        None => None,
    };
    let runs: Vec<(String, Vec<LoadedRun>)> = args
        .run_dirs
        .iter()
        .map(|dir| Ok((dir.display().to_string(), load_run_outputs(dir)?)))
        .collect::<Result<_>>()?;

    let mut doc = serde_json::Map::new();
    let mut text = String::new();

    if let Some(rows) = &pr_rows {
        text.push_str(&render_metrics_table(rows));
        doc.insert("pr_table".into(), json!(rows));
    }

    if let Some(gold) = &gold {
        let mut per_run = serde_json::Map::new();
        for (name, loaded) in &runs {
            let predictions: HashMap<String, _> =
                loaded.iter().map(|run| (run.manifest.product_id.clone(), run.result.extracted.clone())).collect();
            let rows = category_metrics(gold, &predictions)?;
            text.push_str(&format!("\nattribute selection: {name}\n"));
            text.push_str(&render_metrics_table(&rows));
            per_run.insert(name.clone(), json!(rows));
        }
        doc.insert("selection".into(), Value::Object(per_run));
    }

    if args.annotations.is_some() {
        let counts = aggregate_errors(&annotations)?;
        text.push_str("\nerror counts\n");
        text.push_str(&render_error_counts(&counts));
        let as_json: Vec<Value> = counts
            .iter()
            .map(|((step, category), count)| json!({"step": step, "error_category": category, "count": count}))
            .collect();
        doc.insert("errors".into(), json!(as_json));
    }

    if runs.len() > 1 {
        let comparisons = mode_comparisons(&runs, &annotations)?;
        for comparison in &comparisons {
            text.push('\n');
            text.push_str(&render_mode_comparison(comparison));
        }
        doc.insert("modes".into(), json!(comparisons));
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&Value::Object(doc))?);
    } else {
        print!("{}", text.trim_start());
    }
    Ok(Outcome::Success)
}

/// Needs one run of each mode per product; products lacking one are skipped.
fn mode_comparisons(
    runs: &[(String, Vec<LoadedRun>)],
    annotations: &[ErrorAnnotation],
) -> Result<Vec<praise_core::evaluation::ModeComparison>> {
    let mut by_product: BTreeMap<&str, HashMap<PipelineMode, &LoadedRun>> = BTreeMap::new();
    for (_, loaded) in runs {
        for run in loaded {
            by_product.entry(&run.manifest.product_id).or_default().insert(run.manifest.mode, run);
        }
    }
    let mut out = Vec::new();
    for (product_id, modes) in by_product {
        let (Some(full), Some(baseline), Some(ablated)) =
            (modes.get(&PipelineMode::Full), modes.get(&PipelineMode::Baseline), modes.get(&PipelineMode::Ablated))
        else {
            log::warn!("{product_id}: mode comparison needs full, baseline and ablated runs");
            continue;
        };
        out.push(compare_modes(&full.result, &baseline.result, &ablated.result, annotations)?);
    }
    Ok(out)
}
