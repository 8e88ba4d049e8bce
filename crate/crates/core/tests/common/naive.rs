//! Naive per-sample metric definitions sharing no code with the library.

use rand::Rng;
use uavids_core::metrics::*;
use uavids_core::rng::stream;
use uavids_core::Matrix;

pub struct Case {
    pub k: usize,
    pub y: Vec<usize>,
    pub y_hat: Vec<usize>,
    pub p: Matrix,
}

pub fn random_case(seed: u64) -> Case {
    let mut r = stream(seed, 0);
    let n = r.random_range(1..=50);
    let k = r.random_range(2..=5);
    let y: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    let y_hat: Vec<usize> = (0..n)
        .map(|i| if r.random_bool(0.6) { y[i] } else { r.random_range(0..k) })
        .collect();
    // Coarse grid on some cases so that ties occur.
    let coarse = r.random_bool(0.5);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..k)
                .map(|_| {
                    let v: f64 = r.random();
                    if coarse {
                        (v * 4.0).floor() + 1.0
                    } else {
                        v + 1e-3
                    }
                })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    Case {
        k,
        y,
        y_hat,
        p: Matrix::from_rows(&rows),
    }
}

pub fn naive_accuracy(c: &Case) -> f64 {
    let hits = c.y.iter().zip(&c.y_hat).filter(|(a, b)| a == b).count();
    hits as f64 / c.y.len() as f64
}

/// (precision, recall, f1) per class with 0 for undefined ratios.
pub fn naive_prf(c: &Case) -> Vec<(f64, f64, f64)> {
    (0..c.k)
        .map(|k| {
            let mut tp = 0.0;
            let mut pred = 0.0;
            let mut act = 0.0;
            for i in 0..c.y.len() {
                if c.y_hat[i] == k {
                    pred += 1.0;
                }
                if c.y[i] == k {
                    act += 1.0;
                }
                if c.y[i] == k && c.y_hat[i] == k {
                    tp += 1.0;
                }
            }
            let p = if pred > 0.0 { tp / pred } else { 0.0 };
            let r = if act > 0.0 { tp / act } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (p, r, f)
        })
        .collect()
}

/// Gorodkin's R_K as a correlation of one-hot matrices.
pub fn naive_mcc(c: &Case) -> f64 {
    let n = c.y.len() as f64;
    let onehot = |v: &[usize]| -> Vec<Vec<f64>> {
        v.iter()
            .map(|&l| (0..c.k).map(|k| if k == l { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let (x, yy) = (onehot(&c.y_hat), onehot(&c.y));
    let mean = |m: &Vec<Vec<f64>>, k: usize| m.iter().map(|r| r[k]).sum::<f64>() / n;
    let cov = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> f64 {
        (0..c.k)
            .map(|k| {
                let (ma, mb) = (mean(a, k), mean(b, k));
                a.iter().zip(b).map(|(ra, rb)| (ra[k] - ma) * (rb[k] - mb)).sum::<f64>()
            })
            .sum()
    };
    let den = (cov(&x, &x) * cov(&yy, &yy)).sqrt();
    if den > 0.0 {
        cov(&x, &yy) / den
    } else {
        0.0
    }
}

pub fn naive_kappa(c: &Case) -> f64 {
    let n = c.y.len() as f64;
    let po = naive_accuracy(c);
    let pe: f64 = (0..c.k)
        .map(|k| {
            let a = c.y.iter().filter(|&&v| v == k).count() as f64 / n;
            let b = c.y_hat.iter().filter(|&&v| v == k).count() as f64 / n;
            a * b
        })
        .sum();
    if pe >= 1.0 {
        0.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

pub fn naive_log_loss(c: &Case) -> f64 {
    let mut s = 0.0;
    for (i, &l) in c.y.iter().enumerate() {
        let v = c.p.get(i, l).max(1e-15).min(1.0 - 1e-15);
        s -= v.ln();
    }
    s / c.y.len() as f64
}

pub fn naive_brier(c: &Case) -> f64 {
    let mut s = 0.0;
    for (i, &l) in c.y.iter().enumerate() {
        for k in 0..c.k {
            let t = if k == l { 1.0 } else { 0.0 };
            s += (c.p.get(i, k) - t).powi(2);
        }
    }
    s / c.y.len() as f64
}

/// Fraction of (positive, negative) pairs ordered correctly, ties ½.
pub fn naive_auc(scores: &[f64], pos: &[bool]) -> Option<f64> {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if pos[i] && !pos[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| num / pairs)
}

pub fn naive_auc_macro(c: &Case) -> Option<f64> {
    let aucs: Vec<f64> = (0..c.k)
        .filter_map(|k| {
            let pos: Vec<bool> = c.y.iter().map(|&v| v == k).collect();
            naive_auc(&c.p.column(k), &pos)
        })
        .collect();
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Checks all ten metrics on one case; returns a description of the first
/// mismatch.
pub fn check_case(c: &Case) -> Result<(), String> {
    let cm = confusion_matrix(&c.y, &c.y_hat, c.k).map_err(|e| e.to_string())?;
    let m = macro_prf(&cm);
    let prf = naive_prf(c);
    let kf = c.k as f64;
    let pm = prf.iter().map(|v| v.0).sum::<f64>() / kf;
    let rm = prf.iter().map(|v| v.1).sum::<f64>() / kf;
    let fm = prf.iter().map(|v| v.2).sum::<f64>() / kf;
    let acc = cm.trace() as f64 / cm.total() as f64;
    let checks = [
        ("accuracy", acc, naive_accuracy(c)),
        ("precision_macro", m.precision_macro, pm),
        ("recall_macro", m.recall_macro, rm),
        ("f1_macro", m.f1_macro, fm),
        ("balanced_accuracy", m.balanced_accuracy, rm),
        ("mcc", mcc_multiclass(&cm), naive_mcc(c)),
        ("kappa", cohen_kappa(&cm), naive_kappa(c)),
        ("log_loss", log_loss(&c.y, &c.p).unwrap(), naive_log_loss(c)),
        ("brier", brier_score(&c.y, &c.p).unwrap(), naive_brier(c)),
    ];
    for (name, got, want) in checks {
        if !close(got, want) {
            return Err(format!("{name}: {got} vs {want}"));
        }
    }
    let roc = roc_auc_ovr(&c.y, &c.p).unwrap();
    match (roc.auc_macro, naive_auc_macro(c)) {
        (Some(a), Some(b)) if close(a, b) => Ok(()),
        (None, None) => Ok(()),
        (a, b) => Err(format!("auc: {a:?} vs {b:?}")),
    }
}

