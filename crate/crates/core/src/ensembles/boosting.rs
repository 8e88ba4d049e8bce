use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_fit_inputs, EnsembleModel, ModelKind, TrainMeta};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::FeatureTable;
use crate::rng;
use crate::tree::{grow_gradient_tree, ColumnStore, GradientTreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    Regularized,
    /// Categorical columns are replaced by ordered target statistics first.
    Ordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostParams {
    pub learning_rate: f64,
    #[serde(flatten)]
    pub tree: GradientTreeParams,
    /// Prior strength `a` of the ordered target statistics.
    #[serde(default = "default_prior_strength")]
    pub prior_strength: f64,
}

fn default_prior_strength() -> f64 {
    1.0
}

impl BoostParams {
    pub fn defaults(mode: BoostMode) -> Self {
        BoostParams {
            learning_rate: match mode {
                BoostMode::Regularized => 0.3,
                BoostMode::Ordered => 0.1,
            },
            tree: GradientTreeParams::default(),
            prior_strength: 1.0,
        }
    }
}

/// Row-wise softmax, shifted by the max for stability.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Weighted mean multiclass log loss with per-row gradients and diagonal
/// hessians with respect to the logits.
///
/// `g_ik = w_i (p_ik − 1{y_i = k})`, `h_ik = w_i p_ik (1 − p_ik)`; the loss is
/// `−Σ w_i log p_{i,y_i} / Σ w_i`, so `g / Σw` is its exact gradient.
pub fn softmax_loss_grad(logits: &Matrix, y: &[usize], row_weights: &[f64]) -> (f64, Matrix, Matrix) {
    let (n, k) = (logits.rows(), logits.cols());
    let mut g = Matrix::zeros(n, k);
    let mut h = Matrix::zeros(n, k);
    let mut loss = 0.0;
    let mut wsum = 0.0;
    for i in 0..n {
        let z = logits.row(i);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let w = row_weights[i];
        loss += w * (lse - z[y[i]]);
        wsum += w;
        for c in 0..k {
            let p = (z[c] - lse).exp();
            let t = if c == y[i] { 1.0 } else { 0.0 };
            g.set(i, c, w * (p - t));
            h.set(i, c, w * p * (1.0 - p));
        }
    }
    (loss / wsum, g, h)
}

/// Ordered target statistics of one categorical column.
///
/// Rows are visited in `permutation` order; the row at position `i` gets,
/// for every class `c`, `(n_c + a·prior_c) / (n + a)` where `n` counts the
/// earlier rows with the same category and `n_c` those of them labelled
/// `c`. Returns an N×K matrix indexed by original row.
pub fn ordered_target_stats(
    column: &[f64],
    y: &[usize],
    permutation: &[usize],
    prior: &[f64],
    a: f64,
) -> Matrix {
    let k = prior.len();
    let mut out = Matrix::zeros(column.len(), k);
    let mut table = CategoryTable::default();
    for &r in permutation {
        let counts = table.get(column[r]);
        let (tot, per) = match counts {
            Some(c) => (c.iter().sum::<f64>(), c.clone()),
            None => (0.0, vec![0.0; k]),
        };
        for c in 0..k {
            out.set(r, c, (per[c] + a * prior[c]) / (tot + a));
        }
        table.entry(column[r], k)[y[r]] += 1.0;
    }
    out
}

/// Per-category class counts, sorted by category code.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub codes: Vec<f64>,
    pub counts: Vec<Vec<f64>>,
}

impl CategoryTable {
    fn find(&self, code: f64) -> std::result::Result<usize, usize> {
        self.codes.binary_search_by(|c| c.partial_cmp(&code).unwrap_or(Ordering::Less))
    }

    fn get(&self, code: f64) -> Option<&Vec<f64>> {
        self.find(code).ok().map(|i| &self.counts[i])
    }

    fn entry(&mut self, code: f64, k: usize) -> &mut Vec<f64> {
        let i = match self.find(code) {
            Ok(i) => i,
            Err(i) => {
                self.codes.insert(i, code);
                self.counts.insert(i, vec![0.0; k]);
                i
            }
        };
        &mut self.counts[i]
    }
}

/// Fitted ordered encoding; test-time codes use the full training counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedEncoding {
    pub prior: Vec<f64>,
    pub prior_strength: f64,
    /// Original indices of the encoded columns.
    pub columns: Vec<usize>,
    pub tables: Vec<CategoryTable>,
    /// Original feature of each transformed column.
    pub sources: Vec<usize>,
    pub transformed_names: Vec<String>,
}

impl OrderedEncoding {
    fn fit(train: &FeatureTable, permutation: &[usize], a: f64) -> (OrderedEncoding, Matrix) {
        let k = train.n_classes();
        let n = train.n_rows() as f64;
        let prior: Vec<f64> = train.class_counts().iter().map(|&c| c as f64 / n).collect();
        let columns: Vec<usize> = (0..train.n_features()).filter(|&j| train.categorical[j]).collect();
        let mut encoded = Vec::new();
        let mut tables = Vec::new();
        for &j in &columns {
            let col = train.x.column(j);
            encoded.push(ordered_target_stats(&col, &train.y, permutation, &prior, a));
            let mut t = CategoryTable::default();
            for (v, &y) in col.iter().zip(&train.y) {
                t.entry(*v, k)[y] += 1.0;
            }
            tables.push(t);
        }
        let mut enc = OrderedEncoding {
            prior,
            prior_strength: a,
            columns,
            tables,
            sources: Vec::new(),
            transformed_names: Vec::new(),
        };
        for j in 0..train.n_features() {
            if enc.columns.contains(&j) {
                for c in 0..k {
                    enc.sources.push(j);
                    let class = train.class_names.name_of(c).unwrap_or_default();
                    enc.transformed_names.push(format!("{}[{class}]", train.feature_names[j]));
                }
            } else {
                enc.sources.push(j);
                enc.transformed_names.push(train.feature_names[j].clone());
            }
        }
        let x = enc.assemble(&train.x, |ci, row, _| encoded[ci].row(row).to_vec());
        (enc, x)
    }

    fn assemble(&self, x: &Matrix, code: impl Fn(usize, usize, f64) -> Vec<f64>) -> Matrix {
        let width = self.sources.len();
        let mut out = Matrix::zeros(x.rows(), width);
        for i in 0..x.rows() {
            let mut o = 0;
            for j in 0..x.cols() {
                match self.columns.iter().position(|&c| c == j) {
                    Some(ci) => {
                        for v in code(ci, i, x.get(i, j)) {
                            out.set(i, o, v);
                            o += 1;
                        }
                    }
                    None => {
                        out.set(i, o, x.get(i, j));
                        o += 1;
                    }
                }
            }
        }
        out
    }

    /// Encode unseen rows with the full training counts.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let a = self.prior_strength;
        self.assemble(x, |ci, _, v| {
            let counts = self.tables[ci].get(v);
            let tot = counts.map_or(0.0, |c| c.iter().sum());
            (0..self.prior.len())
                .map(|c| (counts.map_or(0.0, |n| n[c]) + a * self.prior[c]) / (tot + a))
                .collect()
        })
    }
}

/// Softmax gradient boosting with one second-order tree per class per round.
///
/// `base_score` is the log of the class-weighted class priors. Each round's
/// K trees are grown in parallel; their order in the model is fixed.
pub fn fit_gradient_boost(
    train: &FeatureTable,
    class_weights: &[f64],
    n_estimators: usize,
    params: &BoostParams,
    mode: BoostMode,
    seed: u64,
) -> Result<EnsembleModel> {
    check_fit_inputs(train, class_weights, n_estimators)?;
    if !(params.learning_rate >= 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be finite and >= 0".into()));
    }
    if !(params.prior_strength > 0.0) {
        return Err(Error::InvalidArgument("prior strength must be > 0".into()));
    }
    let k = train.n_classes();
    let n = train.n_rows();
    let mut notes = Vec::new();
    let (encoding, x) = match mode {
        BoostMode::Ordered if train.categorical.iter().any(|&c| c) => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(seed, 0));
            let (enc, x) = OrderedEncoding::fit(train, &perm, params.prior_strength);
            notes.push("ordered target statistics from a single seeded permutation".to_string());
            (Some(enc), x)
        }
        _ => (None, train.x.clone()),
    };
    let store = ColumnStore::new(&x);
    let w: Vec<f64> = train.y.iter().map(|&y| class_weights[y]).collect();
    let mut prior = vec![0.0; k];
    for (&y, wi) in train.y.iter().zip(&w) {
        prior[y] += wi;
    }
    let wsum: f64 = prior.iter().sum();
    let base_score: Vec<f64> = prior
        .iter()
        .map(|p| {
            if *p > 0.0 {
                (p / wsum).ln()
            } else {
                // An absent class gets a very low but finite logit.
                -30.0
            }
        })
        .collect();

    let mut logits = Matrix::zeros(n, k);
    for i in 0..n {
        logits.row_mut(i).copy_from_slice(&base_score);
    }
    let eta = params.learning_rate;
    let mut trees = Vec::with_capacity(n_estimators * k);
    let mut history = Vec::with_capacity(n_estimators + 1);
    for _ in 0..n_estimators {
        let (loss, g, h) = softmax_loss_grad(&logits, &train.y, &w);
        history.push(loss);
        let round = (0..k)
            .into_par_iter()
            .map(|c| grow_gradient_tree(&store, &g.column(c), &h.column(c), &w, &params.tree))
            .collect::<Result<Vec<_>>>()?;
        for (c, tree) in round.iter().enumerate() {
            for i in 0..n {
                let v = logits.get(i, c) + eta * tree.predict(x.row(i))[0];
                logits.set(i, c, v);
            }
        }
        trees.extend(round);
    }
    history.push(softmax_loss_grad(&logits, &train.y, &w).0);

    Ok(EnsembleModel {
        kind: match mode {
            BoostMode::Regularized => ModelKind::GradBoostRegularized,
            BoostMode::Ordered => ModelKind::GradBoostOrdered,
        },
        n_classes: k,
        feature_names: train.feature_names.clone(),
        class_names: train.class_names.clone(),
        tree_weights: vec![1.0; trees.len()],
        trees,
        learning_rate: eta,
        base_score,
        ordered_encoding: encoding,
        train_meta: TrainMeta {
            seed,
            n_estimators,
            history,
            notes,
            ..Default::default()
        },
    })
}
