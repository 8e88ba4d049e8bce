//! Classification metrics, confusion matrices and one-vs-rest ROC curves.
//!
//! Degenerate denominators resolve to 0 and leave a message in the
//! report's `warnings`.

use serde::{Deserialize, Serialize};

use crate::ensembles::{argmax_rows, EnsembleModel};
use crate::error::{Error, Result};
use crate::ingest::LabelMap;
use crate::json::fmt_f64;
use crate::matrix::Matrix;
use crate::preprocess::FeatureTable;

const CLIP: f64 = 1e-15;
const ROW_SUM_TOL: f64 = 1e-6;

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|k| self.counts[k][k]).sum()
    }

    pub fn actual_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn predicted_totals(&self) -> Vec<u64> {
        (0..self.n_classes())
            .map(|p| self.counts.iter().map(|r| r[p]).sum())
            .collect()
    }
}

fn check_labels(y: &[usize], k: usize) -> Result<()> {
    match y.iter().find(|&&v| v >= k) {
        Some(&bad) => Err(Error::InvalidLabel {
            label: bad,
            n_classes: k,
        }),
        None => Ok(()),
    }
}

pub fn confusion_matrix(y: &[usize], y_hat: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    check_labels(y, k)?;
    check_labels(y_hat, k)?;
    let mut counts = vec![vec![0u64; k]; k];
    for (&a, &p) in y.iter().zip(y_hat) {
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub balanced_accuracy: f64,
    pub per_class: Vec<ClassScores>,
    pub warnings: Vec<String>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Per-class precision/recall/F1 and their unweighted means.
pub fn macro_prf(cm: &ConfusionMatrix) -> MacroScores {
    let k = cm.n_classes();
    let actual = cm.actual_totals();
    let predicted = cm.predicted_totals();
    let mut warnings = Vec::new();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let precision = ratio(tp, predicted[c] as f64).unwrap_or_else(|| {
                warnings.push(format!("precision of class {c} undefined (no predictions); set to 0"));
                0.0
            });
            let recall = ratio(tp, actual[c] as f64).unwrap_or_else(|| {
                warnings.push(format!("recall of class {c} undefined (no support); set to 0"));
                0.0
            });
            let f1 = ratio(2.0 * precision * recall, precision + recall).unwrap_or(0.0);
            ClassScores {
                precision,
                recall,
                f1,
                support: actual[c],
            }
        })
        .collect();
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    let recall_macro = mean(|c| c.recall);
    MacroScores {
        precision_macro: mean(|c| c.precision),
        recall_macro,
        f1_macro: mean(|c| c.f1),
        balanced_accuracy: recall_macro,
        per_class,
        warnings,
    }
}

/// Multiclass Matthews correlation; 0 when either variance factor vanishes.
pub fn mcc_multiclass(cm: &ConfusionMatrix) -> f64 {
    let c = cm.trace() as f64;
    let s = cm.total() as f64;
    let p = cm.predicted_totals();
    let t = cm.actual_totals();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| *a as f64 * *b as f64).sum();
    let pp: f64 = p.iter().map(|a| (*a as f64).powi(2)).sum();
    let tt: f64 = t.iter().map(|a| (*a as f64).powi(2)).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    if den > 0.0 {
        (c * s - pt) / den
    } else {
        0.0
    }
}

/// Cohen's kappa; 0 when chance agreement is 1.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = cm.trace() as f64 / n;
    let pe: f64 = cm
        .actual_totals()
        .iter()
        .zip(cm.predicted_totals())
        .map(|(a, p)| *a as f64 * p as f64)
        .sum::<f64>()
        / (n * n);
    if pe >= 1.0 {
        0.0
    } else {
        (p0 - pe) / (1.0 - pe)
    }
}

/// Rows must be non-negative and sum to 1 within 1e-6.
pub fn validate_probabilities(y: &[usize], p: &Matrix) -> Result<()> {
    if p.rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} probability rows for {} labels",
            p.rows(),
            y.len()
        )));
    }
    check_labels(y, p.cols())?;
    for (i, row) in p.iter_rows().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidProbabilities { row: i, sum });
        }
    }
    Ok(())
}

/// Mean negative log-likelihood with probabilities clipped to [1e-15, 1 − 1e-15].
pub fn log_loss(y: &[usize], p: &Matrix) -> Result<f64> {
    validate_probabilities(y, p)?;
    let s: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &c)| -p.get(i, c).clamp(CLIP, 1.0 - CLIP).ln())
        .sum();
    Ok(s / y.len() as f64)
}

/// Mean squared distance between probability rows and one-hot truth.
pub fn brier_score(y: &[usize], p: &Matrix) -> Result<f64> {
    validate_probabilities(y, p)?;
    let s: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            p.row(i)
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let t = if k == c { 1.0 } else { 0.0 };
                    (v - t) * (v - t)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(s / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class_index: usize,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub auc_macro: Option<f64>,
    pub curves: Vec<RocCurve>,
    pub warnings: Vec<String>,
}

/// Mann–Whitney AUC with tied scores counting ½.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * idx[i..=j].iter().filter(|&&r| positive[r]).count() as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// ROC points at every distinct threshold, from (0,0) to (1,1).
pub fn roc_points(scores: &[f64], positive: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut fpr, mut tpr) = (vec![0.0], vec![0.0]);
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if positive[idx[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        fpr.push(if n_neg > 0.0 { fp / n_neg } else { 0.0 });
        tpr.push(if n_pos > 0.0 { tp / n_pos } else { 0.0 });
    }
    if fpr.last() != Some(&1.0) || tpr.last() != Some(&1.0) {
        fpr.push(1.0);
        tpr.push(1.0);
    }
    (fpr, tpr)
}

/// One-vs-rest AUC per class and their mean over classes with both
/// positives and negatives.
pub fn roc_auc_ovr(y: &[usize], p: &Matrix) -> Result<RocSummary> {
    validate_probabilities(y, p)?;
    let mut warnings = Vec::new();
    let curves: Vec<RocCurve> = (0..p.cols())
        .map(|k| {
            let scores = p.column(k);
            let positive: Vec<bool> = y.iter().map(|&c| c == k).collect();
            let auc = binary_auc(&scores, &positive);
            if auc.is_none() {
                warnings.push(format!("class {k} lacks positives or negatives; AUC skipped"));
            }
            let (fpr, tpr) = roc_points(&scores, &positive);
            RocCurve {
                class_index: k,
                auc,
                fpr,
                tpr,
            }
        })
        .collect();
    let computed: Vec<f64> = curves.iter().filter_map(|c| c.auc).collect();
    let auc_macro = (!computed.is_empty()).then(|| computed.iter().sum::<f64>() / computed.len() as f64);
    Ok(RocSummary {
        auc_macro,
        curves,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub class_names: Vec<String>,
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub balanced_accuracy: f64,
    pub mcc: f64,
    pub cohen_kappa: f64,
    pub log_loss: f64,
    pub brier_score: f64,
    pub roc_auc_macro: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub roc_curves: Vec<RocCurve>,
    pub warnings: Vec<String>,
}

/// Every metric from true labels and a probability matrix; predictions are
/// the row argmax with ties to the lowest class index.
pub fn compute_metrics(y: &[usize], p: &Matrix, class_names: &LabelMap) -> Result<MetricsReport> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("cannot score an empty prediction set".into()));
    }
    if p.cols() != class_names.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} probability columns for {} classes",
            p.cols(),
            class_names.len()
        )));
    }
    validate_probabilities(y, p)?;
    let y_hat = argmax_rows(p);
    let cm = confusion_matrix(y, &y_hat, p.cols())?;
    let prf = macro_prf(&cm);
    let roc = roc_auc_ovr(y, p)?;
    let mut warnings = prf.warnings;
    let mcc = mcc_multiclass(&cm);
    if mcc == 0.0 && cm.trace() != 0 {
        warnings.push("MCC denominator is zero; set to 0".into());
    }
    let kappa = cohen_kappa(&cm);
    warnings.extend(roc.warnings);
    Ok(MetricsReport {
        n_samples: y.len(),
        class_names: class_names.names().iter().map(|s| s.to_string()).collect(),
        accuracy: cm.trace() as f64 / y.len() as f64,
        precision_macro: prf.precision_macro,
        recall_macro: prf.recall_macro,
        f1_macro: prf.f1_macro,
        balanced_accuracy: prf.balanced_accuracy,
        mcc,
        cohen_kappa: kappa,
        log_loss: log_loss(y, p)?,
        brier_score: brier_score(y, p)?,
        roc_auc_macro: roc.auc_macro,
        confusion: cm,
        per_class: prf.per_class,
        roc_curves: roc.curves,
        warnings,
    })
}

pub fn evaluate_model(m: &EnsembleModel, t: &FeatureTable) -> Result<MetricsReport> {
    let p = m.predict_proba(t)?;
    compute_metrics(&t.y, &p, &t.class_names)
}

/// Per-class report rows (Class, Precision, Recall, F1-Score) followed by
/// Accuracy, Macro Avg and Weighted Avg rows, as CSV text.
pub fn classification_report_csv(r: &MetricsReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows: Vec<[String; 4]> = vec![[
        "Class".into(),
        "Precision".into(),
        "Recall".into(),
        "F1-Score".into(),
    ]];
    for (name, c) in r.class_names.iter().zip(&r.per_class) {
        rows.push([name.clone(), fmt_f64(c.precision), fmt_f64(c.recall), fmt_f64(c.f1)]);
    }
    rows.push(["Accuracy".into(), String::new(), String::new(), fmt_f64(r.accuracy)]);
    rows.push([
        "Macro Avg".into(),
        fmt_f64(r.precision_macro),
        fmt_f64(r.recall_macro),
        fmt_f64(r.f1_macro),
    ]);
    let n: f64 = r.per_class.iter().map(|c| c.support as f64).sum();
    let weighted = |f: fn(&ClassScores) -> f64| {
        r.per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / n
    };
    rows.push([
        "Weighted Avg".into(),
        fmt_f64(weighted(|c| c.precision)),
        fmt_f64(weighted(|c| c.recall)),
        fmt_f64(weighted(|c| c.f1)),
    ]);
    for row in rows {
        w.write_record(&row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// Label-based score used for cross-validation and bootstrap comparisons.
/// Higher is better for every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMetric {
    Accuracy,
    PrecisionMacro,
    RecallMacro,
    #[default]
    F1Macro,
    BalancedAccuracy,
    Mcc,
    CohenKappa,
}

impl LabelMetric {
    pub fn score(self, y: &[usize], y_hat: &[usize], k: usize) -> Result<f64> {
        let cm = confusion_matrix(y, y_hat, k)?;
        if cm.total() == 0 {
            return Err(Error::InvalidArgument("cannot score an empty prediction set".into()));
        }
        Ok(match self {
            LabelMetric::Accuracy => cm.trace() as f64 / cm.total() as f64,
            LabelMetric::PrecisionMacro => macro_prf(&cm).precision_macro,
            LabelMetric::RecallMacro => macro_prf(&cm).recall_macro,
            LabelMetric::F1Macro => macro_prf(&cm).f1_macro,
            LabelMetric::BalancedAccuracy => macro_prf(&cm).balanced_accuracy,
            LabelMetric::Mcc => mcc_multiclass(&cm),
            LabelMetric::CohenKappa => cohen_kappa(&cm),
        })
    }
}

impl std::str::FromStr for LabelMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}
