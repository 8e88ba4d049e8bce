use serde::{Deserialize, Serialize};

use super::{argmax, check_fit_inputs, EnsembleModel, ModelKind, TrainMeta};
use crate::error::{Error, Result};
use crate::preprocess::FeatureTable;
use crate::rng;
use crate::tree::{grow_tree_presorted, ColumnStore, FeatureSubset, SplitMode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaBoostVariant {
    /// `½ ln((1−ε)/ε)`, stop once ε ≥ 0.5.
    Paper,
    /// `ln((1−ε)/ε) + ln(K−1)`, stop once ε ≥ 1 − 1/K.
    Samme,
    /// `Samme` for more than two classes, `Paper` otherwise.
    Auto,
}

impl AdaBoostVariant {
    pub fn resolve(self, k: usize) -> AdaBoostVariant {
        match self {
            AdaBoostVariant::Auto if k > 2 => AdaBoostVariant::Samme,
            AdaBoostVariant::Auto => AdaBoostVariant::Paper,
            v => v,
        }
    }

    fn max_error(self, k: usize) -> f64 {
        match self.resolve(k) {
            AdaBoostVariant::Samme => 1.0 - 1.0 / k as f64,
            _ => 0.5,
        }
    }
}

impl std::str::FromStr for AdaBoostVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(AdaBoostVariant::Paper),
            "samme" => Ok(AdaBoostVariant::Samme),
            "auto" => Ok(AdaBoostVariant::Auto),
            other => Err(Error::InvalidArgument(format!("unknown AdaBoost variant `{other}`"))),
        }
    }
}

/// Learner weight for weighted error `epsilon`.
pub fn adaboost_alpha(epsilon: f64, k: usize, variant: AdaBoostVariant) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidErrorRate(epsilon));
    }
    let log_odds = ((1.0 - epsilon) / epsilon).ln();
    Ok(match variant.resolve(k) {
        AdaBoostVariant::Samme => log_odds + ((k as f64) - 1.0).ln(),
        _ => 0.5 * log_odds,
    })
}

/// Depth-1 stump over all features.
pub(crate) fn default_base() -> TreeParams {
    TreeParams {
        max_depth: Some(1),
        feature_subset: FeatureSubset::All,
        split_mode: SplitMode::Best,
        ..Default::default()
    }
}

/// Error rate substituted for a perfect learner so α stays finite.
const PERFECT_EPSILON: f64 = 1e-10;

/// Discrete AdaBoost with resampling-free reweighting.
///
/// A round whose error reaches the variant's limit ends boosting and its
/// learner is discarded, except in the first round, where it is kept with
/// α = 1 so the model can still predict; `train_meta.notes` records this.
pub fn fit_adaboost(
    train: &FeatureTable,
    class_weights: &[f64],
    n_estimators: usize,
    base: &TreeParams,
    variant: AdaBoostVariant,
    seed: u64,
) -> Result<EnsembleModel> {
    check_fit_inputs(train, class_weights, n_estimators)?;
    base.validate()?;
    let k = train.n_classes();
    let n = train.n_rows();
    let resolved = variant.resolve(k);
    let store = ColumnStore::new(&train.x);
    let mut w: Vec<f64> = train.y.iter().map(|&y| class_weights[y]).collect();
    normalize(&mut w);

    let mut trees = Vec::new();
    let mut alphas = Vec::new();
    let mut history = Vec::new();
    let mut notes = vec![format!("variant {resolved:?}").to_lowercase()];
    for t in 0..n_estimators {
        let mut r = rng::stream(seed, t as u64);
        let tree = grow_tree_presorted(&store, &train.y, &w, k, base, &mut r)?;
        let miss: Vec<bool> = (0..n)
            .map(|i| argmax(tree.predict(train.x.row(i))) != train.y[i])
            .collect();
        let eps: f64 = w.iter().zip(&miss).filter(|(_, &m)| m).map(|(wi, _)| wi).sum();
        history.push(eps);
        if eps >= resolved.max_error(k) {
            if trees.is_empty() {
                trees.push(tree);
                alphas.push(1.0);
                notes.push(format!(
                    "round 0 error {eps} reached the limit; learner kept with alpha 1"
                ));
            } else {
                notes.push(format!("stopped at round {t}: error {eps} reached the limit"));
            }
            break;
        }
        let perfect = eps <= 0.0;
        let alpha = adaboost_alpha(eps.max(PERFECT_EPSILON), k, resolved)?;
        trees.push(tree);
        alphas.push(alpha);
        if perfect {
            notes.push(format!("stopped at round {t}: perfect learner"));
            break;
        }
        for (wi, &m) in w.iter_mut().zip(&miss) {
            if m {
                *wi *= alpha.exp();
            }
        }
        normalize(&mut w);
    }
    Ok(EnsembleModel {
        kind: ModelKind::Adaboost,
        n_classes: k,
        feature_names: train.feature_names.clone(),
        class_names: train.class_names.clone(),
        trees,
        tree_weights: alphas,
        learning_rate: 1.0,
        base_score: Vec::new(),
        ordered_encoding: None,
        train_meta: TrainMeta {
            seed,
            n_estimators,
            history,
            notes,
            ..Default::default()
        },
    })
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
}
