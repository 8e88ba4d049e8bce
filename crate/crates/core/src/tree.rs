//! CART core shared by every ensemble.
//!
//! Classification trees split on weighted Gini impurity and store normalized
//! class distributions at the leaves. Gradient trees split on the
//! second-order gain used by regularized boosting and store scalar weights.
//!
//! Growth works on per-feature presorted row orders ([`ColumnStore`]) that are
//! stably partitioned at every split, so a tree costs O(N·d) per level and
//! the sort is paid once per training matrix.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Go left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub feature: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Children {
    pub split: SplitSpec,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub children: Option<Children>,
    /// Class distribution (classification) or `[w]` (gradient trees).
    /// Internal nodes carry the value they would have as a leaf.
    pub value: Vec<f64>,
    /// Total sample weight reaching the node.
    pub cover: f64,
    /// Gini impurity of the node; zero for gradient trees.
    pub impurity: f64,
    /// Importance credited to the split feature: cover-weighted impurity
    /// decrease for classification trees, split gain for gradient trees.
    pub gain: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl Tree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(c) = &self.nodes[i].children {
            i = if x[c.split.feature] <= c.split.threshold {
                c.left
            } else {
                c.right
            };
        }
        i
    }

    pub fn predict(&self, x: &[f64]) -> &[f64] {
        &self.nodes[self.leaf_index(x)].value
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i].children {
                None => 0,
                Some(c) => 1 + walk(t, c.left).max(walk(t, c.right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Sum of split gains per feature.
    pub fn feature_gains(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for n in &self.nodes {
            if let Some(c) = &n.children {
                out[c.split.feature] += n.gain;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    All,
    Sqrt,
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeatureSubset::All => d,
            FeatureSubset::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            FeatureSubset::Count(c) => c.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub feature_subset: FeatureSubset,
    pub split_mode: SplitMode,
    pub min_impurity_decrease: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            feature_subset: FeatureSubset::Sqrt,
            split_mode: SplitMode::Best,
            min_impurity_decrease: 0.0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be at least 2".into()));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(Error::InvalidArgument("min_impurity_decrease must be >= 0".into()));
        }
        Ok(())
    }
}

/// Slack on the Gini decrease so rounding noise never produces a split.
const GINI_EPS: f64 = 1e-12;
const HESSIAN_FLOOR: f64 = 1e-16;

/// `1 − Σ_k (c_k / Σc)²`.
pub fn gini_impurity(weighted_counts: &[f64]) -> Result<f64> {
    let total: f64 = weighted_counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyNode);
    }
    Ok(gini_of(weighted_counts, total))
}

fn gini_of(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let s: f64 = counts.iter().map(|c| (c / total) * (c / total)).sum();
    (1.0 - s).max(0.0)
}

/// Column-major copy of a training matrix with per-feature argsorts.
#[derive(Debug, Clone)]
pub struct ColumnStore {
    n_rows: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl ColumnStore {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let cols: Vec<Vec<f64>> = (0..x.cols()).into_par_iter().map(|j| x.column(j)).collect();
        let order = cols
            .par_iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        ColumnStore {
            n_rows: n,
            cols,
            order,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }
}

/// Node statistics and split scoring.
trait Criterion {
    type Stats: Clone;
    fn zero(&self) -> Self::Stats;
    fn add(&self, s: &mut Self::Stats, row: usize);
    fn remove(&self, s: &mut Self::Stats, row: usize);
    fn improvement(&self, parent: &Self::Stats, left: &Self::Stats, right: &Self::Stats) -> f64;
    fn acceptable(&self, improvement: f64) -> bool;
    fn splittable(&self, s: &Self::Stats) -> bool;
    /// `(value, cover, impurity)`.
    fn summarize(&self, s: &Self::Stats) -> (Vec<f64>, f64, f64);
    fn credited_gain(&self, parent: &Self::Stats, improvement: f64) -> f64;
}

struct Gini<'a> {
    y: &'a [usize],
    w: &'a [f64],
    k: usize,
    min_decrease: f64,
}

#[derive(Clone)]
struct ClassStats {
    counts: Vec<f64>,
    total: f64,
}

impl Criterion for Gini<'_> {
    type Stats = ClassStats;

    fn zero(&self) -> ClassStats {
        ClassStats {
            counts: vec![0.0; self.k],
            total: 0.0,
        }
    }

    fn add(&self, s: &mut ClassStats, row: usize) {
        s.counts[self.y[row]] += self.w[row];
        s.total += self.w[row];
    }

    fn remove(&self, s: &mut ClassStats, row: usize) {
        s.counts[self.y[row]] -= self.w[row];
        s.total -= self.w[row];
    }

    fn improvement(&self, p: &ClassStats, l: &ClassStats, r: &ClassStats) -> f64 {
        let gp = gini_of(&p.counts, p.total);
        let gl = gini_of(&l.counts, l.total);
        let gr = gini_of(&r.counts, r.total);
        gp - (l.total * gl + r.total * gr) / p.total
    }

    fn acceptable(&self, improvement: f64) -> bool {
        improvement > self.min_decrease + GINI_EPS
    }

    fn splittable(&self, s: &ClassStats) -> bool {
        s.counts.iter().filter(|&&c| c > 0.0).count() > 1
    }

    fn summarize(&self, s: &ClassStats) -> (Vec<f64>, f64, f64) {
        let value = s.counts.iter().map(|c| (c / s.total).max(0.0)).collect();
        (value, s.total, gini_of(&s.counts, s.total))
    }

    fn credited_gain(&self, parent: &ClassStats, improvement: f64) -> f64 {
        parent.total * improvement
    }
}

struct SecondOrder<'a> {
    g: &'a [f64],
    h: &'a [f64],
    w: &'a [f64],
    lambda: f64,
    gamma: f64,
}

#[derive(Clone, Copy)]
struct GradStats {
    g: f64,
    h: f64,
    cover: f64,
}

impl SecondOrder<'_> {
    fn score(&self, s: &GradStats) -> f64 {
        s.g * s.g / (s.h + self.lambda).max(HESSIAN_FLOOR)
    }
}

impl Criterion for SecondOrder<'_> {
    type Stats = GradStats;

    fn zero(&self) -> GradStats {
        GradStats {
            g: 0.0,
            h: 0.0,
            cover: 0.0,
        }
    }

    fn add(&self, s: &mut GradStats, row: usize) {
        s.g += self.g[row];
        s.h += self.h[row];
        s.cover += self.w[row];
    }

    fn remove(&self, s: &mut GradStats, row: usize) {
        s.g -= self.g[row];
        s.h -= self.h[row];
        s.cover -= self.w[row];
    }

    fn improvement(&self, p: &GradStats, l: &GradStats, r: &GradStats) -> f64 {
        0.5 * (self.score(l) + self.score(r) - self.score(p)) - self.gamma
    }

    fn acceptable(&self, improvement: f64) -> bool {
        improvement > 0.0
    }

    fn splittable(&self, _: &GradStats) -> bool {
        true
    }

    fn summarize(&self, s: &GradStats) -> (Vec<f64>, f64, f64) {
        (vec![leaf_weight(s.g, s.h, self.lambda)], s.cover, 0.0)
    }

    fn credited_gain(&self, _: &GradStats, improvement: f64) -> f64 {
        improvement
    }
}

/// Optimal leaf weight `−G / (H + λ)`, denominator floored at 1e-16.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda).max(HESSIAN_FLOOR)
}

/// Second-order split gain `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let c = SecondOrder {
        g: &[],
        h: &[],
        w: &[],
        lambda,
        gamma,
    };
    let l = GradStats { g: gl, h: hl, cover: 0.0 };
    let r = GradStats { g: gr, h: hr, cover: 0.0 };
    let p = GradStats {
        g: gl + gr,
        h: hl + hr,
        cover: 0.0,
    };
    c.improvement(&p, &l, &r)
}

struct Candidate {
    split: SplitSpec,
    improvement: f64,
}

fn better(c: &Candidate, best: &Option<Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => {
            c.improvement > b.improvement
                || (c.improvement == b.improvement
                    && (c.split.feature, c.split.threshold) < (b.split.feature, b.split.threshold))
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

struct Grower<'a, C: Criterion> {
    store: &'a ColumnStore,
    crit: C,
    params: TreeParams,
    max_features: usize,
    /// Presorted segments per feature (best mode) or one row list (random mode).
    seg: Vec<Vec<u32>>,
    mark: Vec<bool>,
    buf: Vec<u32>,
}

impl<'a, C: Criterion> Grower<'a, C> {
    fn new(store: &'a ColumnStore, crit: C, params: TreeParams, active: impl Fn(usize) -> bool) -> Self {
        let seg: Vec<Vec<u32>> = match params.split_mode {
            SplitMode::Best => store
                .order
                .iter()
                .map(|o| o.iter().copied().filter(|&r| active(r as usize)).collect())
                .collect(),
            SplitMode::Random => vec![(0..store.n_rows as u32).filter(|&r| active(r as usize)).collect()],
        };
        Grower {
            store,
            crit,
            params,
            max_features: params.feature_subset.resolve(store.n_features()),
            seg,
            mark: vec![false; store.n_rows],
            buf: Vec::new(),
        }
    }

    fn rows(&self, lo: usize, hi: usize) -> &[u32] {
        &self.seg[0][lo..hi]
    }

    fn stats(&self, lo: usize, hi: usize) -> C::Stats {
        let mut s = self.crit.zero();
        for &r in self.rows(lo, hi) {
            self.crit.add(&mut s, r as usize);
        }
        s
    }

    /// Scan feature `f` in best mode; `None` if the feature is constant here.
    fn scan_sorted(&self, f: usize, lo: usize, hi: usize, parent: &C::Stats) -> Option<Option<Candidate>> {
        let rows = &self.seg[f][lo..hi];
        let col = &self.store.cols[f];
        if col[rows[0] as usize] == col[rows[rows.len() - 1] as usize] {
            return None;
        }
        let mut left = self.crit.zero();
        let mut right = parent.clone();
        let mut best: Option<Candidate> = None;
        for i in 0..rows.len() - 1 {
            let r = rows[i] as usize;
            self.crit.add(&mut left, r);
            self.crit.remove(&mut right, r);
            let (a, b) = (col[r], col[rows[i + 1] as usize]);
            if b > a {
                let c = Candidate {
                    split: SplitSpec {
                        feature: f,
                        threshold: midpoint(a, b),
                    },
                    improvement: self.crit.improvement(parent, &left, &right),
                };
                if c.improvement > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.improvement) {
                    best = Some(c);
                }
            }
        }
        Some(best)
    }

    fn scan_random<R: Rng>(
        &self,
        f: usize,
        lo: usize,
        hi: usize,
        parent: &C::Stats,
        rng: &mut R,
    ) -> Option<Option<Candidate>> {
        let rows = self.rows(lo, hi);
        let col = &self.store.cols[f];
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows {
            let v = col[r as usize];
            min = min.min(v);
            max = max.max(v);
        }
        if !(max > min) {
            return None;
        }
        let threshold = rng.random_range(min..max);
        let mut left = self.crit.zero();
        let mut right = parent.clone();
        for &r in rows {
            if col[r as usize] <= threshold {
                self.crit.add(&mut left, r as usize);
                self.crit.remove(&mut right, r as usize);
            }
        }
        Some(Some(Candidate {
            split: SplitSpec { feature: f, threshold },
            improvement: self.crit.improvement(parent, &left, &right),
        }))
    }

    fn find_split<R: Rng>(&self, lo: usize, hi: usize, parent: &C::Stats, rng: &mut R) -> Option<Candidate> {
        let d = self.store.n_features();
        let mut best: Option<Candidate> = None;
        let consider = |found: Option<Option<Candidate>>, best: &mut Option<Candidate>| match found {
            None => false,
            Some(c) => {
                if let Some(c) = c {
                    if better(&c, best) {
                        *best = Some(c);
                    }
                }
                true
            }
        };
        if self.max_features >= d && self.params.split_mode == SplitMode::Best {
            for f in 0..d {
                consider(self.scan_sorted(f, lo, hi, parent), &mut best);
            }
        } else {
            let mut pool: Vec<usize> = (0..d).collect();
            let mut visited = 0;
            let mut i = 0;
            while i < d && visited < self.max_features {
                let j = rng.random_range(i..d);
                pool.swap(i, j);
                let f = pool[i];
                i += 1;
                let found = match self.params.split_mode {
                    SplitMode::Best => self.scan_sorted(f, lo, hi, parent),
                    SplitMode::Random => self.scan_random(f, lo, hi, parent, rng),
                };
                if consider(found, &mut best) {
                    visited += 1;
                }
            }
        }
        best.filter(|b| self.crit.acceptable(b.improvement))
    }

    /// Stable partition of every segment; returns the left size.
    fn partition(&mut self, split: SplitSpec, lo: usize, hi: usize) -> usize {
        let col = &self.store.cols[split.feature];
        let mut n_left = 0;
        for &r in &self.seg[0][lo..hi] {
            let l = col[r as usize] <= split.threshold;
            self.mark[r as usize] = l;
            n_left += l as usize;
        }
        for s in &mut self.seg {
            self.buf.clear();
            let part = &mut s[lo..hi];
            let mut w = 0;
            for i in 0..part.len() {
                let r = part[i];
                if self.mark[r as usize] {
                    part[w] = r;
                    w += 1;
                } else {
                    self.buf.push(r);
                }
            }
            part[w..].copy_from_slice(&self.buf);
        }
        n_left
    }

    fn grow<R: Rng>(mut self, rng: &mut R) -> Tree {
        let n = self.seg[0].len();
        let mut nodes = Vec::new();
        let root_stats = self.stats(0, n);
        let (value, cover, impurity) = self.crit.summarize(&root_stats);
        nodes.push(Node {
            children: None,
            value,
            cover,
            impurity,
            gain: 0.0,
        });
        let mut stack = vec![(0usize, 0usize, n, 0usize, root_stats)];
        while let Some((id, lo, hi, depth, stats)) = stack.pop() {
            let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
            if !depth_ok || hi - lo < self.params.min_samples_split || !self.crit.splittable(&stats) {
                continue;
            }
            let Some(best) = self.find_split(lo, hi, &stats, rng) else {
                continue;
            };
            let n_left = self.partition(best.split, lo, hi);
            if n_left == 0 || n_left == hi - lo {
                continue;
            }
            let mid = lo + n_left;
            let ls = self.stats(lo, mid);
            let rs = self.stats(mid, hi);
            let (left, right) = (nodes.len(), nodes.len() + 1);
            for s in [&ls, &rs] {
                let (value, cover, impurity) = self.crit.summarize(s);
                nodes.push(Node {
                    children: None,
                    value,
                    cover,
                    impurity,
                    gain: 0.0,
                });
            }
            nodes[id].children = Some(Children {
                split: best.split,
                left,
                right,
            });
            nodes[id].gain = self.crit.credited_gain(&stats, best.improvement);
            stack.push((right, mid, hi, depth + 1, rs));
            stack.push((left, lo, mid, depth + 1, ls));
        }
        Tree {
            nodes,
            n_features: self.store.n_features(),
        }
    }
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidArgument(format!("{} weights for {n} rows", w.len())));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("sample weights must be finite and >= 0".into()));
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::InvalidArgument("sample weights sum to zero".into()));
    }
    Ok(())
}

/// Grow a Gini classification tree on presorted data. Rows with zero weight
/// are ignored, so bootstrap samples are passed as multiplicity weights.
pub fn grow_tree_presorted<R: Rng>(
    store: &ColumnStore,
    y: &[usize],
    sample_weights: &[f64],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<Tree> {
    params.validate()?;
    check_weights(sample_weights, store.n_rows())?;
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidLabel {
            label: bad,
            n_classes,
        });
    }
    let crit = Gini {
        y,
        w: sample_weights,
        k: n_classes,
        min_decrease: params.min_impurity_decrease,
    };
    Ok(Grower::new(store, crit, *params, |r| sample_weights[r] > 0.0).grow(rng))
}

pub fn grow_tree<R: Rng>(
    x: &Matrix,
    y: &[usize],
    sample_weights: &[f64],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<Tree> {
    grow_tree_presorted(&ColumnStore::new(x), y, sample_weights, n_classes, params, rng)
}

/// Best root split of a classification problem, or `None` when no split
/// beats `min_impurity_decrease`.
pub fn find_best_split<R: Rng>(
    x: &Matrix,
    y: &[usize],
    sample_weights: &[f64],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<Option<(SplitSpec, f64)>> {
    let stump = TreeParams {
        max_depth: Some(1),
        ..*params
    };
    let t = grow_tree(x, y, sample_weights, n_classes, &stump, rng)?;
    let root = &t.nodes[0];
    Ok(root.children.map(|c| (c.split, root.gain / root.cover)))
}

/// Parameters of a gradient (regression) tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradientTreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for GradientTreeParams {
    fn default() -> Self {
        GradientTreeParams {
            max_depth: Some(6),
            min_samples_split: 2,
            lambda: 1.0,
            gamma: 0.0,
        }
    }
}

/// Grow a second-order regression tree for one class's gradients `g` and
/// hessians `h`. `cover_weights` are the row weights recorded as node cover.
/// Every feature is considered at every node.
pub fn grow_gradient_tree(
    store: &ColumnStore,
    g: &[f64],
    h: &[f64],
    cover_weights: &[f64],
    params: &GradientTreeParams,
) -> Result<Tree> {
    let n = store.n_rows();
    if g.len() != n || h.len() != n || cover_weights.len() != n {
        return Err(Error::InvalidArgument("gradient arrays do not match row count".into()));
    }
    if h.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("hessians must be non-negative".into()));
    }
    if !(params.lambda >= 0.0 && params.gamma >= 0.0) {
        return Err(Error::InvalidArgument("lambda and gamma must be >= 0".into()));
    }
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        feature_subset: FeatureSubset::All,
        split_mode: SplitMode::Best,
        min_impurity_decrease: 0.0,
    };
    tp.validate()?;
    let crit = SecondOrder {
        g,
        h,
        w: cover_weights,
        lambda: params.lambda,
        gamma: params.gamma,
    };
    // The all-features best-mode path never draws from the generator.
    let mut unused = crate::rng::stream(0, 0);
    Ok(Grower::new(store, crit, tp, |_| true).grow(&mut unused))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn all_features() -> TreeParams {
        TreeParams {
            feature_subset: FeatureSubset::All,
            ..Default::default()
        }
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[4.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[2.0, 2.0]).unwrap(), 0.5);
        assert!((gini_impurity(&[1.0, 2.0, 3.0]).unwrap() - (1.0 - 14.0 / 36.0)).abs() < 1e-15);
        assert!(matches!(gini_impurity(&[0.0, 0.0]), Err(Error::EmptyNode)));
    }

    #[test]
    fn best_split_example() {
        let x = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let (s, delta) = find_best_split(&x, &[0, 0, 1, 1], &[1.0; 4], 2, &all_features(), &mut stream(1, 0))
            .unwrap()
            .unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert!((delta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_feature_and_pure_node_give_no_split() {
        let x = Matrix::from_vec(4, 1, vec![3.0; 4]);
        let r = find_best_split(&x, &[0, 1, 0, 1], &[1.0; 4], 2, &all_features(), &mut stream(1, 0)).unwrap();
        assert!(r.is_none());
        let x = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let r = find_best_split(&x, &[1, 1, 1, 1], &[1.0; 4], 2, &all_features(), &mut stream(1, 0)).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // Both features separate the classes perfectly.
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        let (s, _) = find_best_split(&x, &[0, 0, 1, 1], &[1.0; 4], 2, &all_features(), &mut stream(1, 0))
            .unwrap()
            .unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn separable_data_gives_depth_one_tree() {
        let x = Matrix::from_vec(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = [0, 0, 0, 1, 1, 1];
        let t = grow_tree(&x, &y, &[1.0; 6], 2, &all_features(), &mut stream(1, 0)).unwrap();
        assert_eq!(t.depth(), 1);
        for i in 0..6 {
            assert_eq!(t.predict(x.row(i))[y[i]], 1.0);
        }
    }

    #[test]
    fn depth_zero_is_prior_leaf() {
        let x = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let p = TreeParams {
            max_depth: Some(0),
            ..all_features()
        };
        let t = grow_tree(&x, &[0, 1, 1, 1], &[1.0; 4], 2, &p, &mut stream(1, 0)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[9.0]), &[0.25, 0.75]);
    }

    #[test]
    fn boundary_goes_left() {
        let t = Tree {
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
                    value: vec![0.5, 0.5],
                    cover: 2.0,
                    impurity: 0.5,
                    gain: 1.0,
                },
                Node {
                    children: None,
                    value: vec![1.0, 0.0],
                    cover: 1.0,
                    impurity: 0.0,
                    gain: 0.0,
                },
                Node {
                    children: None,
                    value: vec![0.0, 1.0],
                    cover: 1.0,
                    impurity: 0.0,
                    gain: 0.0,
                },
            ],
            n_features: 1,
        };
        assert_eq!(t.predict(&[-1.0]), &[1.0, 0.0]);
        assert_eq!(t.predict(&[0.0]), &[1.0, 0.0]);
        assert_eq!(t.predict(&[0.1]), &[0.0, 1.0]);
    }

    #[test]
    fn gradient_examples() {
        assert!((leaf_weight(-2.0, 4.0, 1.0) - 0.4).abs() < 1e-15);
        let gain = split_gain(-2.0, 2.0, 2.0, 2.0, 1.0, 0.0);
        assert!((gain - 4.0 / 3.0).abs() < 1e-12);
        assert!(split_gain(-2.0, 2.0, 2.0, 2.0, 1.0, 2.0) < 0.0);
    }

    #[test]
    fn gradient_tree_takes_positive_gain_only() {
        let x = Matrix::from_vec(4, 1, vec![0.0, 0.0, 1.0, 1.0]);
        let store = ColumnStore::new(&x);
        let g = [-1.0, -1.0, 1.0, 1.0];
        let h = [1.0; 4];
        let t = grow_gradient_tree(&store, &g, &h, &[1.0; 4], &GradientTreeParams::default()).unwrap();
        assert_eq!(t.depth(), 1);
        assert!((t.predict(&[0.0])[0] - 2.0 / 3.0).abs() < 1e-15);
        let p = GradientTreeParams {
            gamma: 2.0,
            ..Default::default()
        };
        let t = grow_gradient_tree(&store, &g, &h, &[1.0; 4], &p).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }
}
