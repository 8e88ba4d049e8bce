use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ProbabilisticClassifier;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeOptions {
    pub n_samples: usize,
    /// `None` means `0.75·√d`.
    pub kernel_width: Option<f64>,
    pub top_k: usize,
}

impl Default for LimeOptions {
    fn default() -> Self {
        LimeOptions {
            n_samples: 5000,
            kernel_width: None,
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeTerm {
    pub feature: usize,
    pub name: String,
    pub coefficient: f64,
    /// `coefficient · local std`, the ranking key.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeClass {
    pub class_index: usize,
    /// Surrogate value at the explained instance.
    pub intercept: f64,
    pub top: Vec<LimeTerm>,
    pub coefficients: Vec<f64>,
    /// Kernel-weighted R² of the surrogate, in [0, 1].
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub model_proba: Vec<f64>,
    pub classes: Vec<LimeClass>,
}

/// Local linear surrogate around `x`, which must already be in the
/// standardized feature space the model consumes.
///
/// Sample 0 is `x` itself; the rest add unit Gaussian noise to every
/// feature. The surrogate is fitted on offsets `z − x`, so its intercept is
/// the local prediction.
pub fn lime_explain<M: ProbabilisticClassifier>(
    model: &M,
    x: &[f64],
    opts: &LimeOptions,
    seed: u64,
) -> Result<LimeExplanation> {
    let d = x.len();
    if d != model.feature_names().len() {
        return Err(Error::SchemaMismatch(format!(
            "model expects {} features, row has {d}",
            model.feature_names().len()
        )));
    }
    let n = opts.n_samples;
    if n < d + 2 {
        return Err(Error::InvalidArgument(format!("n_samples {n} must be at least d+2 = {}", d + 2)));
    }
    let width = opts.kernel_width.unwrap_or(0.75 * (d as f64).sqrt());
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel width {width} must be positive")));
    }
    let mut r = rng::stream(seed, 0);
    let mut offsets = Matrix::zeros(n, d);
    for i in 1..n {
        for v in offsets.row_mut(i) {
            *v = StandardNormal.sample(&mut r);
        }
    }
    let mut z = offsets.clone();
    for i in 0..n {
        for (v, xi) in z.row_mut(i).iter_mut().zip(x) {
            *v += xi;
        }
    }
    let proba = model.predict_proba_matrix(&z)?;
    let w: Vec<f64> = offsets
        .iter_rows()
        .map(|o| (-o.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp())
        .collect();
    let sw: f64 = w.iter().sum();

    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { offsets.get(i, j - 1) });
    let mut weighted = design.clone();
    for (i, wi) in w.iter().enumerate() {
        weighted.row_mut(i).scale_mut(*wi);
    }
    let mut gram = design.transpose() * &weighted;
    for j in 1..=d {
        gram[(j, j)] += RIDGE;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SurrogateFailed("normal equations are not positive definite".into()))?;

    let local_std: Vec<f64> = (0..d)
        .map(|j| {
            let m = (0..n).map(|i| w[i] * offsets.get(i, j)).sum::<f64>() / sw;
            ((0..n).map(|i| w[i] * (offsets.get(i, j) - m).powi(2)).sum::<f64>() / sw).sqrt()
        })
        .collect();

    let k = model.n_classes();
    let mut classes = Vec::with_capacity(k);
    for c in 0..k {
        let target = DVector::from_fn(n, |i, _| proba.get(i, c));
        let beta = chol.solve(&(weighted.transpose() * &target));
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::SurrogateFailed(format!("non-finite coefficients for class {c}")));
        }
        let fitted = &design * &beta;
        let mean = (0..n).map(|i| w[i] * target[i]).sum::<f64>() / sw;
        let ss_tot: f64 = (0..n).map(|i| w[i] * (target[i] - mean).powi(2)).sum();
        let ss_res: f64 = (0..n).map(|i| w[i] * (target[i] - fitted[i]).powi(2)).sum();
        let r2 = if ss_tot <= f64::EPSILON * sw * mean.abs().max(1.0) {
            1.0
        } else {
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        };
        let coefficients: Vec<f64> = beta.iter().skip(1).copied().collect();
        let mut top: Vec<LimeTerm> = coefficients
            .iter()
            .enumerate()
            .map(|(j, b)| LimeTerm {
                feature: j,
                name: model.feature_names()[j].clone(),
                coefficient: *b,
                weighted: b * local_std[j],
            })
            .collect();
        top.sort_by(|a, b| b.weighted.abs().total_cmp(&a.weighted.abs()).then(a.feature.cmp(&b.feature)));
        top.truncate(opts.top_k);
        classes.push(LimeClass {
            class_index: c,
            intercept: beta[0],
            top,
            coefficients,
            r2,
        });
    }
    Ok(LimeExplanation {
        n_samples: n,
        kernel_width: width,
        model_proba: proba.row(0).to_vec(),
        classes,
    })
}
