use rand::Rng;
use rayon::prelude::*;

use super::{check_fit_inputs, EnsembleModel, ModelKind, TrainMeta};
use crate::error::Result;
use crate::preprocess::FeatureTable;
use crate::rng;
use crate::tree::{grow_tree_presorted, ColumnStore, SplitMode, TreeParams};

/// Shared forest trainer. Tree `t` uses stream `t` of `seed` for its
/// bootstrap draw and its split randomness, so the result does not depend
/// on how trees are scheduled across threads.
pub fn fit_forest(
    train: &FeatureTable,
    class_weights: &[f64],
    n_estimators: usize,
    params: &TreeParams,
    bootstrap: bool,
    seed: u64,
) -> Result<EnsembleModel> {
    check_fit_inputs(train, class_weights, n_estimators)?;
    params.validate()?;
    let store = ColumnStore::new(&train.x);
    let n = train.n_rows();
    let k = train.n_classes();
    let trees = (0..n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let w: Vec<f64> = if bootstrap {
                let mut m = vec![0u32; n];
                for _ in 0..n {
                    m[r.random_range(0..n)] += 1;
                }
                m.iter()
                    .zip(&train.y)
                    .map(|(&c, &y)| c as f64 * class_weights[y])
                    .collect()
            } else {
                train.y.iter().map(|&y| class_weights[y]).collect()
            };
            grow_tree_presorted(&store, &train.y, &w, k, params, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if bootstrap && params.split_mode == SplitMode::Best {
        ModelKind::RandomForest
    } else {
        ModelKind::ExtraTrees
    };
    Ok(EnsembleModel {
        kind,
        n_classes: k,
        feature_names: train.feature_names.clone(),
        class_names: train.class_names.clone(),
        tree_weights: vec![1.0; trees.len()],
        trees,
        learning_rate: 1.0,
        base_score: Vec::new(),
        ordered_encoding: None,
        train_meta: TrainMeta {
            seed,
            n_estimators,
            ..Default::default()
        },
    })
}

/// Bootstrapped trees with best splits over `params.feature_subset`.
pub fn fit_random_forest(
    train: &FeatureTable,
    class_weights: &[f64],
    n_estimators: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<EnsembleModel> {
    let p = TreeParams {
        split_mode: SplitMode::Best,
        ..*params
    };
    fit_forest(train, class_weights, n_estimators, &p, true, seed)
}

/// Full-data trees with uniformly drawn thresholds.
pub fn fit_extra_trees(
    train: &FeatureTable,
    class_weights: &[f64],
    n_estimators: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<EnsembleModel> {
    let p = TreeParams {
        split_mode: SplitMode::Random,
        ..*params
    };
    let mut m = fit_forest(train, class_weights, n_estimators, &p, false, seed)?;
    m.kind = ModelKind::ExtraTrees;
    Ok(m)
}
