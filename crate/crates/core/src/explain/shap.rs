//! Path-dependent TreeSHAP and its brute-force Shapley oracle.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{argmax, EnsembleModel, ModelKind};
use crate::error::{Error, Result};
use crate::preprocess::FeatureTable;
use crate::rng;
use crate::tree::{Node, Tree};

/// Space the attributions add up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    Probability,
    Logit,
}

pub fn output_space(m: &EnsembleModel) -> OutputSpace {
    if m.kind.is_boosting() {
        OutputSpace::Logit
    } else {
        OutputSpace::Probability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAttribution {
    pub class_index: usize,
    pub base_value: f64,
    pub phi: Vec<f64>,
    /// Model output for this class; equals `base_value + Σ phi`.
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub instance_index: usize,
    pub output_space: OutputSpace,
    pub feature_names: Vec<String>,
    pub classes: Vec<ClassAttribution>,
}

/// Per-class contribution of every node of tree `t` to the model output.
/// Only leaf rows are meaningful.
fn tree_outputs(m: &EnsembleModel, t: usize) -> Vec<Vec<f64>> {
    let k = m.n_classes;
    let tree = &m.trees[t];
    let total_alpha: f64 = m.tree_weights.iter().sum();
    tree.nodes
        .iter()
        .map(|n| match m.kind {
            ModelKind::RandomForest | ModelKind::ExtraTrees => {
                let scale = 1.0 / m.trees.len() as f64;
                n.value.iter().map(|v| v * scale).collect()
            }
            ModelKind::Adaboost => {
                let mut v = vec![0.0; k];
                v[argmax(&n.value)] = m.tree_weights[t] / total_alpha;
                v
            }
            ModelKind::GradBoostRegularized | ModelKind::GradBoostOrdered => {
                let mut v = vec![0.0; k];
                v[t % k] = m.learning_rate * n.value[0];
                v
            }
        })
        .collect()
}

fn check_cover(tree: &Tree) -> Result<()> {
    for n in &tree.nodes {
        let ok = n.cover.is_finite() && if n.is_leaf() { n.cover >= 0.0 } else { n.cover > 0.0 };
        if !ok {
            return Err(Error::ModelLacksCover);
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let lf = l as f64;
    for i in (0..l).rev() {
        let wi = path[i].weight;
        path[i + 1].weight += one * wi * (i as f64 + 1.0) / (lf + 1.0);
        path[i].weight = zero * wi * (lf - i as f64) / (lf + 1.0);
    }
}

fn unwind(path: &mut Vec<PathElem>, i: usize) {
    let l = path.len() - 1;
    let (one, zero) = (path[i].one, path[i].zero);
    let lf = l as f64;
    let mut n = path[l].weight;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = path[j].weight;
            path[j].weight = n * (lf + 1.0) / ((j as f64 + 1.0) * one);
            n = t - path[j].weight * zero * (lf - j as f64) / (lf + 1.0);
        } else {
            path[j].weight = path[j].weight * (lf + 1.0) / (zero * (lf - j as f64));
        }
    }
    for j in i..l {
        path[j].feature = path[j + 1].feature;
        path[j].zero = path[j + 1].zero;
        path[j].one = path[j + 1].one;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElem], i: usize) -> f64 {
    let l = path.len() - 1;
    let (one, zero) = (path[i].one, path[i].zero);
    let lf = l as f64;
    let mut next = path[l].weight;
    let mut total = 0.0;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = next * (lf + 1.0) / ((j as f64 + 1.0) * one);
            total += t;
            next = path[j].weight - t * zero * (lf - j as f64) / (lf + 1.0);
        } else {
            total += path[j].weight / (zero * (lf - j as f64) / (lf + 1.0));
        }
    }
    total
}

struct ShapCtx<'a> {
    nodes: &'a [Node],
    outputs: &'a [Vec<f64>],
    x: &'a [f64],
    /// `phi[feature][class]`
    phi: Vec<Vec<f64>>,
}

impl ShapCtx<'_> {
    fn recurse(&mut self, j: usize, mut path: Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
        extend(&mut path, zero, one, feature);
        let node = &self.nodes[j];
        match &node.children {
            None => {
                for i in 1..path.len() {
                    let w = unwound_sum(&path, i);
                    let e = path[i];
                    let f = e.feature.expect("only the root element lacks a feature");
                    for (p, v) in self.phi[f].iter_mut().zip(&self.outputs[j]) {
                        *p += w * (e.one - e.zero) * v;
                    }
                }
            }
            Some(c) => {
                let f = c.split.feature;
                let (hot, cold) = if self.x[f] <= c.split.threshold {
                    (c.left, c.right)
                } else {
                    (c.right, c.left)
                };
                let (mut iz, mut io) = (1.0, 1.0);
                if let Some(k) = path.iter().position(|e| e.feature == Some(f)) {
                    iz = path[k].zero;
                    io = path[k].one;
                    unwind(&mut path, k);
                }
                let cover = node.cover;
                let hz = iz * self.nodes[hot].cover / cover;
                let cz = iz * self.nodes[cold].cover / cover;
                self.recurse(hot, path.clone(), hz, io, Some(f));
                self.recurse(cold, path, cz, 0.0, Some(f));
            }
        }
    }
}

/// Cover-weighted mean of the per-node outputs over all leaves.
fn expected_output(tree: &Tree, outputs: &[Vec<f64>]) -> Vec<f64> {
    let root = tree.nodes[0].cover;
    let k = outputs[0].len();
    let mut e = vec![0.0; k];
    for (n, o) in tree.nodes.iter().zip(outputs) {
        if n.is_leaf() {
            for (a, v) in e.iter_mut().zip(o) {
                *a += n.cover / root * v;
            }
        }
    }
    e
}

/// SHAP values of one tree for input `x` (in the tree's own input space),
/// as `(phi[feature][class], expected value per class)`.
pub fn tree_shap_single(tree: &Tree, outputs: &[Vec<f64>], x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    check_cover(tree)?;
    let k = outputs[0].len();
    let mut ctx = ShapCtx {
        nodes: &tree.nodes,
        outputs,
        x,
        phi: vec![vec![0.0; k]; tree.n_features],
    };
    ctx.recurse(0, Vec::new(), 1.0, 1.0, None);
    Ok((ctx.phi, expected_output(tree, outputs)))
}

/// Attributions of every class for one row of original (untransformed)
/// features.
pub fn tree_shap(m: &EnsembleModel, x: &[f64], instance_index: usize) -> Result<Attribution> {
    if x.len() != m.n_features() {
        return Err(Error::SchemaMismatch(format!(
            "model expects {} features, row has {}",
            m.n_features(),
            x.len()
        )));
    }
    let k = m.n_classes;
    let xt = match &m.ordered_encoding {
        Some(enc) => enc.transform(&crate::Matrix::from_vec(1, x.len(), x.to_vec())).row(0).to_vec(),
        None => x.to_vec(),
    };
    let sources = m.tree_input_sources();
    let mut phi = vec![vec![0.0; k]; m.n_features()];
    let mut base = if m.kind.is_boosting() {
        m.base_score.clone()
    } else {
        vec![0.0; k]
    };
    for t in 0..m.trees.len() {
        let outputs = tree_outputs(m, t);
        let (p, e) = tree_shap_single(&m.trees[t], &outputs, &xt)?;
        for (j, row) in p.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                phi[sources[j]][c] += v;
            }
        }
        for (b, v) in base.iter_mut().zip(e) {
            *b += v;
        }
    }
    let output = m.decision_row(&xt);
    Ok(Attribution {
        instance_index,
        output_space: output_space(m),
        feature_names: m.feature_names.clone(),
        classes: (0..k)
            .map(|c| ClassAttribution {
                class_index: c,
                base_value: base[c],
                phi: phi.iter().map(|r| r[c]).collect(),
                output: output[c],
            })
            .collect(),
    })
}

pub const MAX_ORACLE_FEATURES: usize = 12;

/// Exact Shapley values by enumerating all coalitions of `d` players.
pub fn brute_shapley_oracle(d: usize, value: impl Fn(&[bool]) -> f64) -> Result<Vec<f64>> {
    if d > MAX_ORACLE_FEATURES {
        return Err(Error::TooManyFeatures(d));
    }
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let values: Vec<f64> = (0..1usize << d)
        .map(|mask| {
            let s: Vec<bool> = (0..d).map(|i| mask >> i & 1 == 1).collect();
            value(&s)
        })
        .collect();
    let mut phi = vec![0.0; d];
    for (mask, v) in values.iter().enumerate() {
        let size = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                let weight = fact[size] * fact[d - size - 1] / fact[d];
                *p += weight * (values[mask | 1 << i] - v);
            }
        }
    }
    Ok(phi)
}

/// Cover-weighted conditional expectation of a tree output given the
/// features in `coalition` fixed to `x`: the value function that
/// path-dependent TreeSHAP attributes.
pub fn conditional_expectation(tree: &Tree, x: &[f64], coalition: &[bool], leaf: &dyn Fn(usize) -> f64) -> f64 {
    fn go(tree: &Tree, i: usize, x: &[f64], s: &[bool], leaf: &dyn Fn(usize) -> f64) -> f64 {
        let n = &tree.nodes[i];
        match &n.children {
            None => leaf(i),
            Some(c) => {
                let f = c.split.feature;
                if s[f] {
                    let next = if x[f] <= c.split.threshold { c.left } else { c.right };
                    go(tree, next, x, s, leaf)
                } else {
                    let (l, r) = (&tree.nodes[c.left], &tree.nodes[c.right]);
                    (l.cover * go(tree, c.left, x, s, leaf) + r.cover * go(tree, c.right, x, s, leaf)) / n.cover
                }
            }
        }
    }
    go(tree, 0, x, coalition, leaf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureShap {
    pub feature: usize,
    pub name: String,
    pub mean_abs_phi: f64,
    /// `(phi, standardized feature value)` per explained row.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub class_index: usize,
    pub class_name: String,
    pub output_space: OutputSpace,
    pub n_rows: usize,
    pub features: Vec<FeatureShap>,
}

/// Row indices to explain: all rows, or a seeded sample of `max_rows`.
pub fn explained_rows(n: usize, max_rows: Option<usize>, seed: u64) -> Vec<usize> {
    match max_rows {
        Some(cap) if cap < n => {
            let mut idx = sample(&mut rng::stream(seed, 0), n, cap).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n).collect(),
    }
}

/// Attributions for the given rows of `t`, in parallel.
pub fn attributions(m: &EnsembleModel, t: &FeatureTable, rows: &[usize]) -> Result<Vec<Attribution>> {
    rows.par_iter().map(|&i| tree_shap(m, t.x.row(i), i)).collect()
}

/// Global per-feature summary for one class, ranked by mean |phi|.
pub fn summarize(attrs: &[Attribution], t: &FeatureTable, class_index: usize, top_n: Option<usize>) -> ShapSummary {
    let d = t.n_features();
    let n = attrs.len().max(1) as f64;
    let mut features: Vec<FeatureShap> = (0..d)
        .map(|j| {
            let points: Vec<(f64, f64)> = attrs
                .iter()
                .map(|a| (a.classes[class_index].phi[j], t.x.get(a.instance_index, j)))
                .collect();
            FeatureShap {
                feature: j,
                name: t.feature_names[j].clone(),
                mean_abs_phi: points.iter().map(|p| p.0.abs()).sum::<f64>() / n,
                points,
            }
        })
        .collect();
    features.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi).then(a.feature.cmp(&b.feature)));
    if let Some(k) = top_n {
        features.truncate(k);
    }
    ShapSummary {
        class_index,
        class_name: t.class_names.name_of(class_index).unwrap_or_default().to_string(),
        output_space: attrs.first().map_or(OutputSpace::Probability, |a| a.output_space),
        n_rows: attrs.len(),
        features,
    }
}

pub fn shap_summary(
    m: &EnsembleModel,
    t: &FeatureTable,
    class_index: usize,
    top_n: Option<usize>,
    max_rows: Option<usize>,
    seed: u64,
) -> Result<ShapSummary> {
    if t.n_rows() == 0 {
        return Err(Error::InvalidArgument("no rows to explain".into()));
    }
    if class_index >= m.n_classes {
        return Err(Error::InvalidLabel {
            label: class_index,
            n_classes: m.n_classes,
        });
    }
    let rows = explained_rows(t.n_rows(), max_rows, seed);
    let attrs = attributions(m, t, &rows)?;
    Ok(summarize(&attrs, t, class_index, top_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Children, SplitSpec};

    fn leaf(v: f64, cover: f64) -> Node {
        Node {
            children: None,
            value: vec![v],
            cover,
            impurity: 0.0,
            gain: 0.0,
        }
    }

    fn stump() -> Tree {
        Tree {
            nodes: vec![
                Node {
                    children: Some(Children {
                        split: SplitSpec {
                            feature: 0,
                            threshold: 0.0,
                        },
                        left: 1,
                        right: 2,
                    }),
                    value: vec![0.5],
                    cover: 100.0,
                    impurity: 0.0,
                    gain: 0.0,
                },
                leaf(0.0, 50.0),
                leaf(1.0, 50.0),
            ],
            n_features: 2,
        }
    }

    fn outputs(t: &Tree) -> Vec<Vec<f64>> {
        t.nodes.iter().map(|n| n.value.clone()).collect()
    }

    #[test]
    fn stump_example() {
        let t = stump();
        let (phi, base) = tree_shap_single(&t, &outputs(&t), &[1.0, 7.0]).unwrap();
        assert_eq!(phi[0][0], 0.5);
        assert_eq!(phi[1][0], 0.0);
        assert_eq!(base[0], 0.5);
        let oracle = brute_shapley_oracle(2, |s| {
            conditional_expectation(&t, &[1.0, 7.0], s, &|i| t.nodes[i].value[0])
        })
        .unwrap();
        assert_eq!(oracle, vec![0.5, 0.0]);
    }

    #[test]
    fn single_leaf_has_no_attribution() {
        let t = Tree {
            nodes: vec![leaf(0.3, 10.0)],
            n_features: 3,
        };
        let (phi, base) = tree_shap_single(&t, &outputs(&t), &[1.0, 2.0, 3.0]).unwrap();
        assert!(phi.iter().all(|r| r[0] == 0.0));
        assert_eq!(base[0], 0.3);
    }

    #[test]
    fn oracle_axioms() {
        let c = [0.5, -1.0, 2.0];
        let phi = brute_shapley_oracle(3, |s| s.iter().zip(c).filter(|(i, _)| **i).map(|(_, v)| v).sum()).unwrap();
        for (p, v) in phi.iter().zip(c) {
            assert!((p - v).abs() < 1e-15);
        }
        let sym = brute_shapley_oracle(2, |s| if s[0] || s[1] { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(sym[0], sym[1]);
        assert!(matches!(brute_shapley_oracle(13, |_| 0.0), Err(Error::TooManyFeatures(13))));
    }

    #[test]
    fn zero_cover_is_rejected() {
        let mut t = stump();
        t.nodes[0].cover = 0.0;
        assert!(matches!(
            tree_shap_single(&t, &outputs(&t), &[0.0, 0.0]),
            Err(Error::ModelLacksCover)
        ));
    }
}
