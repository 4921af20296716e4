//! Step 4: rule-based consolidation of compared attributes into a report.
//! No model calls happen here; output depends only on the inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::{
    to_canonical_json, AttributeKey, CallStats, CategoryAssignment, CategorySection, ComparedAttribute,
    ComparisonStatus, Insight, StatusSection, StructuredReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

/// Groups rows by (key, status) in first-seen order. Values keep first-seen
/// order without repeats, evidence is the sorted set of review ids, and
/// non-empty justifications are kept in input order without repeats.
/// Categories are left empty for [`build_report`] to fill.
pub fn merge_insights(compared: &[ComparedAttribute]) -> Vec<Insight> {
    let mut index: HashMap<(&AttributeKey, ComparisonStatus), usize> = HashMap::new();
    let mut merged: Vec<(Insight, BTreeSet<&str>)> = Vec::new();
    for row in compared {
        let slot = *index.entry((&row.attribute.key, row.status)).or_insert_with(|| {
            merged.push((
                Insight {
                    key: row.attribute.key.clone(),
                    values: Vec::new(),
                    status: row.status,
                    category: String::new(),
                    evidence: Vec::new(),
                    justifications: Vec::new(),
                    mentions: 0,
                },
                BTreeSet::new(),
            ));
            merged.len() - 1
        });
        let (insight, evidence) = &mut merged[slot];
        if !insight.values.contains(&row.attribute.value) {
            insight.values.push(row.attribute.value.clone());
        }
        let justification = row.justification.trim();
        if !justification.is_empty() && !insight.justifications.iter().any(|j| j == justification) {
            insight.justifications.push(justification.to_string());
        }
        evidence.insert(&row.attribute.review_id);
        insight.mentions += 1;
    }
    merged
        .into_iter()
        .map(|(mut insight, evidence)| {
            insight.evidence = evidence.into_iter().map(str::to_string).collect();
            insight
        })
        .collect()
}

/// Attaches categories and orders the report: statuses in
/// [`ComparisonStatus::ALL`] order, categories lexicographically, insights by
/// key (remaining fields break ties so any input order gives one output).
pub fn build_report(
    insights: &[Insight],
    categories: &CategoryAssignment,
    product_id: &str,
    stats: CallStats,
) -> StructuredReport {
    let mut buckets: BTreeMap<ComparisonStatus, BTreeMap<String, Vec<Insight>>> = BTreeMap::new();
    for insight in insights {
        let mut insight = insight.clone();
        insight.category = categories.category_of(&insight.key).to_string();
        buckets.entry(insight.status).or_default().entry(insight.category.clone()).or_default().push(insight);
    }

    let sections = ComparisonStatus::ALL
        .iter()
        .map(|&status| {
            let categories = buckets
                .remove(&status)
                .unwrap_or_default()
                .into_iter()
                .map(|(category, mut insights)| {
                    insights.sort_by(|a, b| {
                        (&a.key, &a.values, &a.evidence, &a.justifications, a.mentions).cmp(&(
                            &b.key,
                            &b.values,
                            &b.evidence,
                            &b.justifications,
                            b.mentions,
                        ))
                    });
                    CategorySection { category, insights }
                })
                .collect();
            StatusSection { status, categories }
        })
        .collect();

    StructuredReport { product_id: product_id.to_string(), sections, call_stats: stats }
}

/// Rendered form of a report. Call statistics are run metadata (they differ
/// between a cold and a cached run) and go to the run manifest instead.
#[derive(Serialize)]
struct ReportDocument<'a> {
    product_id: &'a str,
    sections: &'a [StatusSection],
}

pub fn render_report(report: &StructuredReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            to_canonical_json(&ReportDocument { product_id: &report.product_id, sections: &report.sections })
        }
        ReportFormat::Markdown => render_markdown(report),
    }
}

fn render_markdown(report: &StructuredReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Review insights: {}", report.product_id);
    let actionable: usize = report
        .sections
        .iter()
        .filter(|s| s.status.is_actionable())
        .flat_map(|s| &s.categories)
        .map(|c| c.insights.len())
        .sum();
    let _ = writeln!(out, "\n{actionable} actionable finding(s).");

    for section in &report.sections {
        let _ = writeln!(out, "\n## {}", section.status);
        if section.categories.is_empty() {
            let _ = writeln!(out, "\n_No findings._");
            continue;
        }
        for category in &section.categories {
            let _ = writeln!(out, "\n### {}\n", category.category);
            for insight in &category.insights {
                let _ = writeln!(out, "- **{}**: {}", insight.key, insight.values.join("; "));
                let _ = writeln!(out, "  - Reviews: {}", insight.evidence.join(", "));
                for justification in &insight.justifications {
                    let _ = writeln!(out, "  - Justification: {}", one_line(justification));
                }
            }
        }
    }
    out
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
