//! The five tree-ensemble classifiers and their shared model type.

mod adaboost;
mod boosting;
mod forest;
pub mod io;

pub use adaboost::{adaboost_alpha, fit_adaboost, AdaBoostVariant};
pub use boosting::{
    fit_gradient_boost, ordered_target_stats, softmax, softmax_loss_grad, BoostMode, BoostParams,
    OrderedEncoding,
};
pub use forest::{fit_extra_trees, fit_forest, fit_random_forest};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabelMap;
use crate::matrix::Matrix;
use crate::preprocess::{class_weights, FeatureTable};
use crate::tree::{Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    ExtraTrees,
    Adaboost,
    GradBoostRegularized,
    GradBoostOrdered,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::Adaboost,
        ModelKind::GradBoostRegularized,
        ModelKind::GradBoostOrdered,
    ];

    /// Short command-line name.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "rf",
            ModelKind::ExtraTrees => "et",
            ModelKind::Adaboost => "ada",
            ModelKind::GradBoostRegularized => "gbr",
            ModelKind::GradBoostOrdered => "gbo",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "Random Forest",
            ModelKind::ExtraTrees => "Extra Trees",
            ModelKind::Adaboost => "AdaBoost",
            ModelKind::GradBoostRegularized => "Regularized Gradient Boosting",
            ModelKind::GradBoostOrdered => "Ordered Gradient Boosting",
        }
    }

    pub fn is_boosting(self) -> bool {
        matches!(self, ModelKind::GradBoostRegularized | ModelKind::GradBoostOrdered)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s {
            "rf" | "random_forest" => ModelKind::RandomForest,
            "et" | "extra_trees" => ModelKind::ExtraTrees,
            "ada" | "adaboost" => ModelKind::Adaboost,
            "gbr" | "grad_boost_regularized" => ModelKind::GradBoostRegularized,
            "gbo" | "grad_boost_ordered" => ModelKind::GradBoostOrdered,
            other => return Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        };
        Ok(k)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub n_estimators: usize,
    pub params: serde_json::Value,
    /// Per-round weighted training loss (boosting) or weighted error (AdaBoost).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A fitted ensemble.
///
/// Forests hold `T` probability trees; AdaBoost holds classification trees
/// with vote weights `α_t` in `tree_weights`; boosting holds `T·K` scalar
/// trees in round-major order (tree `t·K + k` belongs to class `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub kind: ModelKind,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub class_names: LabelMap,
    pub trees: Vec<Tree>,
    pub tree_weights: Vec<f64>,
    pub learning_rate: f64,
    pub base_score: Vec<f64>,
    pub ordered_encoding: Option<OrderedEncoding>,
    pub train_meta: TrainMeta,
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Feature matrix as seen by the trees (ordered-encoded if applicable).
    pub fn tree_inputs(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        Ok(match &self.ordered_encoding {
            Some(enc) => enc.transform(x),
            None => x.clone(),
        })
    }

    /// For each tree input column, the original feature it derives from.
    pub fn tree_input_sources(&self) -> Vec<usize> {
        match &self.ordered_encoding {
            Some(enc) => enc.sources.clone(),
            None => (0..self.n_features()).collect(),
        }
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features, input has {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// Class probabilities for each row of `x`.
    pub fn predict_proba_matrix(&self, x: &Matrix) -> Result<Matrix> {
        let xt = self.tree_inputs(x)?;
        let k = self.n_classes;
        let rows: Vec<Vec<f64>> = (0..xt.rows())
            .into_par_iter()
            .map(|i| self.proba_row(xt.row(i)))
            .collect();
        let mut out = Matrix::zeros(xt.rows(), k);
        for (i, r) in rows.into_iter().enumerate() {
            out.row_mut(i).copy_from_slice(&r);
        }
        Ok(out)
    }

    /// Checks feature names before predicting.
    pub fn predict_proba(&self, t: &FeatureTable) -> Result<Matrix> {
        if t.feature_names != self.feature_names {
            return Err(Error::SchemaMismatch(
                "table features differ from the model's features".into(),
            ));
        }
        self.predict_proba_matrix(&t.x)
    }

    pub fn predict(&self, t: &FeatureTable) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(t)?))
    }

    /// Raw additive scores per class for boosting (logits), probabilities otherwise.
    pub fn decision_row(&self, x_tree: &[f64]) -> Vec<f64> {
        let k = self.n_classes;
        match self.kind {
            ModelKind::RandomForest | ModelKind::ExtraTrees => {
                let mut acc = vec![0.0; k];
                for t in &self.trees {
                    for (a, v) in acc.iter_mut().zip(t.predict(x_tree)) {
                        *a += v;
                    }
                }
                let n = self.trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                acc
            }
            ModelKind::Adaboost => {
                let mut acc = vec![0.0; k];
                let total: f64 = self.tree_weights.iter().sum();
                for (t, a) in self.trees.iter().zip(&self.tree_weights) {
                    acc[argmax(t.predict(x_tree))] += a;
                }
                acc.iter_mut().for_each(|v| *v /= total);
                acc
            }
            ModelKind::GradBoostRegularized | ModelKind::GradBoostOrdered => {
                let mut acc = self.base_score.clone();
                for (i, t) in self.trees.iter().enumerate() {
                    acc[i % k] += self.learning_rate * t.predict(x_tree)[0];
                }
                acc
            }
        }
    }

    fn proba_row(&self, x_tree: &[f64]) -> Vec<f64> {
        let d = self.decision_row(x_tree);
        if self.kind.is_boosting() {
            softmax(&d)
        } else {
            d
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_rows(p: &Matrix) -> Vec<usize> {
    p.iter_rows().map(argmax).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: usize,
    pub name: String,
    pub importance: f64,
}

/// Tree-weighted mean of per-feature split credit, normalized to sum 1 and
/// sorted descending (ties by feature index). For forests and AdaBoost the
/// credit is cover-weighted Gini decrease; for boosting it is split gain.
/// Ordered-encoded columns are credited to their source feature.
pub fn gini_importance(m: &EnsembleModel) -> Vec<FeatureImportance> {
    let sources = m.tree_input_sources();
    let mut acc = vec![0.0; m.n_features()];
    let weights: Vec<f64> = match m.kind {
        ModelKind::Adaboost => m.tree_weights.clone(),
        _ => vec![1.0; m.trees.len()],
    };
    let wsum: f64 = weights.iter().sum();
    for (t, w) in m.trees.iter().zip(&weights) {
        for (j, g) in t.feature_gains().into_iter().enumerate() {
            acc[sources[j]] += w * g / wsum;
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    let mut out: Vec<FeatureImportance> = acc
        .into_iter()
        .enumerate()
        .map(|(j, v)| FeatureImportance {
            feature: j,
            name: m.feature_names[j].clone(),
            importance: v,
        })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.feature.cmp(&b.feature)));
    out
}

/// Everything needed to fit one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_estimators: usize,
    /// Forest trees; AdaBoost base learner when `adaboost_base` is absent.
    pub tree: Option<TreeParams>,
    pub adaboost_base: Option<TreeParams>,
    pub adaboost_variant: AdaBoostVariant,
    pub boost: Option<BoostParams>,
    pub use_class_weights: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::new(ModelKind::RandomForest)
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            n_estimators: 100,
            tree: None,
            adaboost_base: None,
            adaboost_variant: AdaBoostVariant::Auto,
            boost: None,
            use_class_weights: true,
        }
    }

    pub fn with_estimators(mut self, t: usize) -> Self {
        self.n_estimators = t;
        self
    }
}

/// Fit the model described by `spec`.
pub fn fit_model(spec: &ModelSpec, train: &FeatureTable, seed: u64) -> Result<EnsembleModel> {
    let cw = if spec.use_class_weights {
        class_weights(&train.y, train.n_classes())?.w
    } else {
        vec![1.0; train.n_classes()]
    };
    let mut model = match spec.kind {
        ModelKind::RandomForest => {
            let p = spec.tree.unwrap_or_default();
            fit_random_forest(train, &cw, spec.n_estimators, &p, seed)?
        }
        ModelKind::ExtraTrees => {
            let p = spec.tree.unwrap_or_default();
            fit_extra_trees(train, &cw, spec.n_estimators, &p, seed)?
        }
        ModelKind::Adaboost => {
            let p = spec.adaboost_base.unwrap_or_else(adaboost::default_base);
            fit_adaboost(train, &cw, spec.n_estimators, &p, spec.adaboost_variant, seed)?
        }
        ModelKind::GradBoostRegularized | ModelKind::GradBoostOrdered => {
            let mode = if spec.kind == ModelKind::GradBoostOrdered {
                BoostMode::Ordered
            } else {
                BoostMode::Regularized
            };
            let p = spec.boost.unwrap_or_else(|| BoostParams::defaults(mode));
            fit_gradient_boost(train, &cw, spec.n_estimators, &p, mode, seed)?
        }
    };
    model.train_meta.params = serde_json::to_value(spec).unwrap_or_default();
    Ok(model)
}

pub(crate) fn check_fit_inputs(train: &FeatureTable, cw: &[f64], t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("n_estimators must be at least 1".into()));
    }
    if cw.len() != train.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "{} class weights for {} classes",
            cw.len(),
            train.n_classes()
        )));
    }
    if train.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty training table".into()));
    }
    Ok(())
}
