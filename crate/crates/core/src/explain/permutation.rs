use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProbabilisticClassifier;
use crate::ensembles::argmax_rows;
use crate::error::{Error, Result};
use crate::metrics::LabelMetric;
use crate::preprocess::FeatureTable;
use crate::rng;

pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationRow {
    pub feature: usize,
    pub name: String,
    /// Mean drop of the metric over repeats.
    pub mean: f64,
    /// Population standard deviation of the drops.
    pub std: f64,
    pub drops: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationImportance {
    pub metric: LabelMetric,
    pub baseline: f64,
    pub repeats: usize,
    /// Sorted by mean drop, descending; ties by feature index.
    pub rows: Vec<PermutationRow>,
}

/// Drop in `metric` when one column of `t` is shuffled. Repeat `r` of
/// feature `j` shuffles with its own stream, so results do not depend on
/// scheduling.
pub fn permutation_importance<M: ProbabilisticClassifier>(
    model: &M,
    t: &FeatureTable,
    metric: LabelMetric,
    repeats: usize,
    seed: u64,
) -> Result<PermutationImportance> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if t.n_rows() == 0 {
        return Err(Error::InvalidArgument("no rows to permute".into()));
    }
    let k = t.n_classes();
    let baseline = metric.score(&t.y, &argmax_rows(&model.predict_proba_matrix(&t.x)?), k)?;
    let d = t.n_features();
    let jobs: Vec<(usize, usize)> = (0..d).flat_map(|j| (0..repeats).map(move |r| (j, r))).collect();
    let drops: Vec<f64> = jobs
        .par_iter()
        .map(|&(j, r)| {
            let mut col = t.x.column(j);
            col.shuffle(&mut rng::stream(seed, (j * repeats + r) as u64));
            let mut x = t.x.clone();
            for (i, v) in col.into_iter().enumerate() {
                x.set(i, j, v);
            }
            let s = metric.score(&t.y, &argmax_rows(&model.predict_proba_matrix(&x)?), k)?;
            Ok(baseline - s)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<PermutationRow> = (0..d)
        .map(|j| {
            let dr = drops[j * repeats..(j + 1) * repeats].to_vec();
            let n = repeats as f64;
            let mean = dr.iter().sum::<f64>() / n;
            let var = dr.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            PermutationRow {
                feature: j,
                name: t.feature_names[j].clone(),
                mean,
                std: var.sqrt(),
                drops: dr,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.feature.cmp(&b.feature)));
    Ok(PermutationImportance {
        metric,
        baseline,
        repeats,
        rows,
    })
}
