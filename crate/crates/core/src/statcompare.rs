//! Nonparametric comparison of classifiers: Friedman, exact Wilcoxon
//! signed-rank with Holm step-down, bootstrap intervals and McNemar.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::LabelMetric;
use crate::pipeline::FoldScores;
use crate::rng;

pub use crate::pipeline::cross_validate;

/// Default fold count: five paired samples give the exact one-sided
/// Wilcoxon floor of 2⁻⁵ = 0.03125.
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_BOOTSTRAP_ITERATIONS: usize = 20_000;
pub const MIN_BOOTSTRAP_ITERATIONS: usize = 1_000;
const EXACT_WILCOXON_MAX_N: usize = 25;

fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map_or(f64::NAN, |d| d.sf(x))
}

/// Ranks 1..=n with ties sharing their average rank. `descending` ranks the
/// largest value first.
pub fn average_ranks(v: &[f64], descending: bool) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = v[a].total_cmp(&v[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Mean rank of each model; rank 1 is the best score.
    pub mean_ranks: Vec<f64>,
}

/// Friedman test on fold scores (higher is better).
pub fn friedman_test(fs: &FoldScores) -> Result<FriedmanResult> {
    let k = fs.scores.len();
    let n = fs.scores.first().map_or(0, Vec::len);
    if k < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Friedman test needs at least 2 models and 2 folds, got {k} and {n}"
        )));
    }
    if fs.scores.iter().any(|s| s.len() != n || s.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("fold scores are ragged or non-finite".into()));
    }
    let mut sums = vec![0.0; k];
    for f in 0..n {
        let col: Vec<f64> = fs.scores.iter().map(|s| s[f]).collect();
        for (s, r) in sums.iter_mut().zip(average_ranks(&col, true)) {
            *s += r;
        }
    }
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let center = (k as f64 + 1.0) / 2.0;
    let ss: f64 = mean_ranks.iter().map(|r| (r - center).powi(2)).sum();
    let statistic = 12.0 * n as f64 / (k as f64 * (k as f64 + 1.0)) * ss;
    Ok(FriedmanResult {
        statistic,
        df: k - 1,
        p_value: chi2_sf(statistic, (k - 1) as f64),
        mean_ranks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to exceed `b`.
    #[default]
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
    /// All differences were zero; `p_value` is 1.
    pub degenerate: bool,
}

/// Number of sign assignments reaching each doubled rank sum.
fn signed_rank_counts(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Wilcoxon signed-rank test of paired samples.
///
/// Zero differences are dropped and tied |differences| share average
/// ranks. Up to 25 remaining pairs the null distribution is enumerated
/// exactly; beyond that a normal approximation with tie correction (no
/// continuity correction) is used. Two-sided p is twice the smaller tail,
/// capped at 1.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite paired difference".into()));
    }
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w_plus: 0.0,
            n: 0,
            p_value: 1.0,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs, false);
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();

    let (upper, lower, exact) = if n <= EXACT_WILCOXON_MAX_N {
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let counts = signed_rank_counts(&doubled);
        let total = 2f64.powi(n as i32);
        let w2 = (2.0 * w_plus).round() as usize;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / total;
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / total;
        (upper, lower, true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let z = (w_plus - mean) / var.sqrt();
        let std = Normal::standard();
        (std.sf(z), std.cdf(z), false)
    };
    let p_value = match alternative {
        Alternative::Greater => upper,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    };
    Ok(WilcoxonResult {
        w_plus,
        n,
        p_value,
        exact,
        degenerate: false,
    })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p_raw: &[f64]) -> Result<Vec<f64>> {
    if p_raw.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("p values must lie in [0, 1]".into()));
    }
    let m = p_raw.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p_raw[a].total_cmp(&p_raw[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (j, &i) in idx.iter().enumerate() {
        running = running.max(((m - j) as f64 * p_raw[i]).min(1.0));
        out[i] = running;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub iterations: usize,
    pub confidence: f64,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Bootstrap distribution of `metric(A) − metric(B)` over resampled test rows.
///
/// Iteration `i` draws its row indices from stream `i` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_diff_ci(
    pred_a: &[usize],
    pred_b: &[usize],
    y_true: &[usize],
    n_classes: usize,
    metric: LabelMetric,
    iterations: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    let n = y_true.len();
    if pred_a.len() != n || pred_b.len() != n || n == 0 {
        return Err(Error::InvalidArgument("bootstrap inputs must be aligned and non-empty".into()));
    }
    if iterations < MIN_BOOTSTRAP_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_ITERATIONS} iterations, got {iterations}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument("confidence must lie in (0, 1)".into()));
    }
    let diffs: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let mut r = rng::stream(seed, it as u64);
            let mut y = Vec::with_capacity(n);
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for _ in 0..n {
                let i = r.random_range(0..n);
                y.push(y_true[i]);
                a.push(pred_a[i]);
                b.push(pred_b[i]);
            }
            Ok(metric.score(&y, &a, n_classes)? - metric.score(&y, &b, n_classes)?)
        })
        .collect::<Result<_>>()?;
    let mean_diff = diffs.iter().sum::<f64>() / iterations as f64;
    let mut sorted = diffs;
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok(BootstrapCi {
        mean_diff,
        ci_low: percentile(&sorted, tail),
        ci_high: percentile(&sorted, 1.0 - tail),
        iterations,
        confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McNemarTable {
    pub both_correct: u64,
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    pub both_wrong: u64,
}

impl McNemarTable {
    pub fn total(&self) -> u64 {
        self.both_correct + self.b + self.c + self.both_wrong
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub table: McNemarTable,
    pub chi2: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar statistic `(|b − c| − 1)² / (b + c)`, 0
/// when `b + c = 0`, with a chi-square(1) tail.
pub fn mcnemar_from_table(table: McNemarTable) -> McNemarResult {
    let (b, c) = (table.b as f64, table.c as f64);
    let chi2 = if b + c == 0.0 {
        0.0
    } else {
        ((b - c).abs() - 1.0).powi(2) / (b + c)
    };
    McNemarResult {
        table,
        chi2,
        p_value: chi2_sf(chi2, 1.0),
    }
}

pub fn mcnemar_test(y_true: &[usize], pred_a: &[usize], pred_b: &[usize]) -> Result<McNemarResult> {
    if pred_a.len() != y_true.len() || pred_b.len() != y_true.len() {
        return Err(Error::InvalidArgument("McNemar inputs must be aligned".into()));
    }
    let mut t = McNemarTable {
        both_correct: 0,
        b: 0,
        c: 0,
        both_wrong: 0,
    };
    for ((y, a), b) in y_true.iter().zip(pred_a).zip(pred_b) {
        match (a == y, b == y) {
            (true, true) => t.both_correct += 1,
            (true, false) => t.b += 1,
            (false, true) => t.c += 1,
            (false, false) => t.both_wrong += 1,
        }
    }
    Ok(mcnemar_from_table(t))
}

/// Holdout predictions of every model in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutPredictions {
    pub y_true: Vec<usize>,
    pub n_classes: usize,
    /// Aligned with [`FoldScores::models`].
    pub predictions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub model_a: String,
    pub model_b: String,
    pub wilcoxon: WilcoxonResult,
    pub p_holm: f64,
    pub bootstrap: Option<BootstrapCi>,
    pub mcnemar: Option<McNemarResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: LabelMetric,
    pub models: Vec<String>,
    pub fold_means: Vec<f64>,
    pub friedman: FriedmanResult,
    pub reference: String,
    pub alternative: Alternative,
    pub pairwise: Vec<PairwiseComparison>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub alternative: Alternative,
    pub bootstrap_iterations: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            alternative: Alternative::Greater,
            bootstrap_iterations: DEFAULT_BOOTSTRAP_ITERATIONS,
            confidence: 0.95,
            seed: 0,
        }
    }
}

/// Compare model `reference` against every other model: Friedman over all,
/// Wilcoxon on fold scores with Holm over the pairs, and, when holdout
/// predictions are given, bootstrap intervals and McNemar on the holdout.
pub fn compare_models(
    fs: &FoldScores,
    reference: usize,
    holdout: Option<&HoldoutPredictions>,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    if reference >= fs.models.len() {
        return Err(Error::InvalidArgument(format!("no model at index {reference}")));
    }
    let friedman = friedman_test(fs)?;
    let others: Vec<usize> = (0..fs.models.len()).filter(|&m| m != reference).collect();
    let tests: Vec<WilcoxonResult> = others
        .iter()
        .map(|&m| wilcoxon_signed_rank(&fs.scores[reference], &fs.scores[m], opts.alternative))
        .collect::<Result<_>>()?;
    let holm = holm_adjust(&tests.iter().map(|t| t.p_value).collect::<Vec<_>>())?;
    let mut pairwise = Vec::with_capacity(others.len());
    for (i, (&m, w)) in others.iter().zip(tests).enumerate() {
        let (bootstrap, mcnemar) = match holdout {
            None => (None, None),
            Some(h) => {
                let pa = &h.predictions[reference];
                let pb = &h.predictions[m];
                let seed = rng::derive_seed(opts.seed, m as u64);
                (
                    Some(bootstrap_diff_ci(
                        pa,
                        pb,
                        &h.y_true,
                        h.n_classes,
                        fs.metric,
                        opts.bootstrap_iterations,
                        opts.confidence,
                        seed,
                    )?),
                    Some(mcnemar_test(&h.y_true, pa, pb)?),
                )
            }
        };
        pairwise.push(PairwiseComparison {
            model_a: fs.models[reference].clone(),
            model_b: fs.models[m].clone(),
            wilcoxon: w,
            p_holm: holm[i],
            bootstrap,
            mcnemar,
        });
    }
    let mut notes = vec![format!(
        "{} folds; with 5 paired folds the smallest exact one-sided Wilcoxon p is 2^-5 = 0.03125",
        fs.n_folds()
    )];
    if pairwise.iter().any(|p| p.wilcoxon.degenerate) {
        notes.push("some pairs had identical fold scores; their Wilcoxon p is reported as 1".into());
    }
    Ok(ComparisonReport {
        metric: fs.metric,
        models: fs.models.clone(),
        fold_means: fs.means(),
        friedman,
        reference: fs.models[reference].clone(),
        alternative: opts.alternative,
        pairwise,
        notes,
    })
}
