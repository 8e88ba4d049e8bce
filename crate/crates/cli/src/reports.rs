//! Report files: JSON documents and the CSV tables derived from them.
//!
//! Floats in CSV cells use the same 17-significant-digit format as JSON.

use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use uavids_core::ensembles::{FeatureImportance, ModelKind};
use uavids_core::explain::{AblationReport, LimeExplanation, PermutationImportance, ShapSummary};
use uavids_core::json::fmt_f64;
use uavids_core::metrics::MetricsReport;
use uavids_core::pipeline::FoldScores;
use uavids_core::statcompare::{Alternative, ComparisonReport, McNemarResult, McNemarTable};

use crate::error::{CliError, CliResult};

/// Holdout metrics of every evaluated model, keyed by short model name.
pub type EvaluationReport = IndexMap<String, MetricsReport>;

/// Gini importances keyed by short model name.
pub type ImportanceReport = IndexMap<String, Vec<FeatureImportance>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub row: usize,
    pub true_class: String,
    pub predicted_class: String,
    pub lime: LimeExplanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub model: String,
    pub permutation: Option<PermutationImportance>,
    pub shap: Option<Vec<ShapSummary>>,
    pub local: Option<LocalExplanation>,
}

/// Human-readable model name for a short name, or the short name itself.
pub fn display_name(short: &str) -> String {
    ModelKind::from_str(short).map_or_else(|_| short.to_string(), |k| k.display_name().to_string())
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Metric rows by model columns.
pub fn metrics_table_csv(r: &EvaluationReport) -> String {
    let mut header = vec!["Metric".to_string()];
    header.extend(r.keys().map(|k| display_name(k)));
    type Getter = fn(&MetricsReport) -> Option<f64>;
    let metrics: [(&str, Getter); 10] = [
        ("Accuracy", |m| Some(m.accuracy)),
        ("Precision", |m| Some(m.precision_macro)),
        ("Recall", |m| Some(m.recall_macro)),
        ("F1 Score", |m| Some(m.f1_macro)),
        ("Balanced Accuracy", |m| Some(m.balanced_accuracy)),
        ("Matthews Corrcoef", |m| Some(m.mcc)),
        ("Cohen Kappa", |m| Some(m.cohen_kappa)),
        ("Log Loss", |m| Some(m.log_loss)),
        ("Brier Score Loss", |m| Some(m.brier_score)),
        ("ROC AUC", |m| m.roc_auc_macro),
    ];
    let mut rows = vec![header];
    for (name, get) in metrics {
        let mut row = vec![name.to_string()];
        row.extend(r.values().map(|m| opt(get(m))));
        rows.push(row);
    }
    csv_string(rows)
}

pub fn importance_csv(items: &[FeatureImportance]) -> String {
    let mut rows = vec![vec!["Rank".into(), "Feature".into(), "Importance".into()]];
    for (i, f) in items.iter().enumerate() {
        rows.push(vec![(i + 1).to_string(), f.name.clone(), fmt_f64(f.importance)]);
    }
    csv_string(rows)
}

pub fn permutation_csv(p: &PermutationImportance) -> String {
    let mut rows = vec![vec![
        "Rank".into(),
        "Feature".into(),
        "Importance Mean".into(),
        "Importance Std".into(),
    ]];
    for (i, r) in p.rows.iter().enumerate() {
        rows.push(vec![(i + 1).to_string(), r.name.clone(), fmt_f64(r.mean), fmt_f64(r.std)]);
    }
    csv_string(rows)
}

fn relation(alt: Alternative) -> &'static str {
    match alt {
        Alternative::Greater => ">",
        Alternative::TwoSided => "vs",
    }
}

/// Pairwise Wilcoxon rows with raw and Holm-adjusted p-values.
pub fn pairwise_csv(r: &ComparisonReport) -> String {
    let mut rows = vec![vec![
        "Comparison".into(),
        "p_raw".into(),
        "p_holm".into(),
        "Mean A".into(),
        "Mean B".into(),
    ]];
    let mean_of = |name: &str| {
        r.models
            .iter()
            .position(|m| m == name)
            .map(|i| r.fold_means[i])
    };
    for p in &r.pairwise {
        rows.push(vec![
            format!(
                "{} {} {}",
                display_name(&p.model_a),
                relation(r.alternative),
                display_name(&p.model_b)
            ),
            fmt_f64(p.wilcoxon.p_value),
            fmt_f64(p.p_holm),
            opt(mean_of(&p.model_a)),
            opt(mean_of(&p.model_b)),
        ]);
    }
    csv_string(rows)
}

/// Bootstrap mean differences with their percentile interval.
pub fn bootstrap_csv(r: &ComparisonReport) -> String {
    let pct = r
        .pairwise
        .iter()
        .find_map(|p| p.bootstrap.as_ref())
        .map_or(95.0, |b| b.confidence * 100.0);
    let mut rows = vec![vec![
        "Comparison".into(),
        "Mean diff".into(),
        format!("{pct}% CI low"),
        format!("{pct}% CI high"),
    ]];
    for p in &r.pairwise {
        if let Some(b) = &p.bootstrap {
            rows.push(vec![
                format!("{} - {}", display_name(&p.model_a), display_name(&p.model_b)),
                fmt_f64(b.mean_diff),
                fmt_f64(b.ci_low),
                fmt_f64(b.ci_high),
            ]);
        }
    }
    csv_string(rows)
}

/// 2×2 agreement table: rows are model A correct/wrong, columns model B.
pub fn contingency_csv(a: &str, b: &str, t: &McNemarTable) -> String {
    csv_string(vec![
        vec!["Contingency Table".into(), format!("{b} Correct"), format!("{b} Wrong")],
        vec![format!("{a} Correct"), t.both_correct.to_string(), t.b.to_string()],
        vec![format!("{a} Wrong"), t.c.to_string(), t.both_wrong.to_string()],
    ])
}

pub fn mcnemar_csv(results: &[(String, McNemarResult)]) -> String {
    let mut rows = vec![vec!["Test".into(), "Chi2".into(), "p-value".into()]];
    for (label, m) in results {
        rows.push(vec![label.clone(), fmt_f64(m.chi2), fmt_f64(m.p_value)]);
    }
    csv_string(rows)
}

pub fn fold_scores_csv(fs: &FoldScores) -> String {
    let mut header = vec!["Model".to_string()];
    header.extend((0..fs.n_folds()).map(|f| format!("Fold {}", f + 1)));
    header.push("Mean".into());
    let mut rows = vec![header];
    for ((name, s), mean) in fs.models.iter().zip(&fs.scores).zip(fs.means()) {
        let mut row = vec![display_name(name)];
        row.extend(s.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(mean));
        rows.push(row);
    }
    csv_string(rows)
}

pub fn ablation_csv(r: &AblationReport) -> String {
    let mut rows = vec![vec![
        "Configuration".into(),
        "Features".into(),
        "Mean".into(),
        "Delta".into(),
    ]];
    for row in &r.rows {
        rows.push(vec![
            row.configuration.clone(),
            row.features.len().to_string(),
            fmt_f64(row.mean),
            fmt_f64(row.delta),
        ]);
    }
    csv_string(rows)
}

/// A 2×2 agreement table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub model_a: String,
    pub model_b: String,
    pub table: McNemarTable,
}

/// Parse the agreement-table CSV: an optional header naming model B's
/// columns, then the "correct" row and the "wrong" row of model A, each
/// ending in two counts. A bare 2×2 grid of counts is accepted too.
pub fn parse_contingency(path: &Path) -> CliResult<Contingency> {
    let bad = |m: String| CliError::file(path, m);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut header: Option<Vec<String>> = None;
    let mut data: Vec<(String, [u64; 2])> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let fields: Vec<&str> = rec.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let counts: Option<Vec<u64>> = fields.iter().rev().take(2).map(|f| f.parse().ok()).collect();
        match counts {
            Some(c) if fields.len() >= 2 => {
                let label = if fields.len() > 2 { fields[0].to_string() } else { String::new() };
                data.push((label, [c[1], c[0]]));
            }
            _ if data.is_empty() && header.is_none() => {
                header = Some(fields.iter().map(|s| s.to_string()).collect());
            }
            _ => return Err(bad(format!("row {:?} does not end in two counts", fields))),
        }
    }
    if data.len() != 2 {
        return Err(bad(format!("expected 2 count rows, found {}", data.len())));
    }
    let strip = |s: &str, suffix: &str| s.strip_suffix(suffix).map(|x| x.trim().to_string());
    let model_b = header
        .as_ref()
        .and_then(|h| h.iter().rev().nth(1).and_then(|s| strip(s, "Correct")))
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "B".into());
    let model_a = strip(&data[0].0, "Correct")
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "A".into());
    Ok(Contingency {
        model_a,
        model_b,
        table: McNemarTable {
            both_correct: data[0].1[0],
            b: data[0].1[1],
            c: data[1].1[0],
            both_wrong: data[1].1[1],
        },
    })
}
