//! Random trees with consistent covers for checking TreeSHAP.

use rand::Rng;
use uavids_core::explain::{brute_shapley_oracle, conditional_expectation, tree_shap_single};
use uavids_core::rng::stream;
use uavids_core::tree::{Children, Node, SplitSpec, Tree};

pub fn random_tree(seed: u64, d: usize, max_depth: usize, k: usize) -> Tree {
    fn grow(r: &mut impl Rng, nodes: &mut Vec<Node>, cover: f64, depth: usize, d: usize, max_depth: usize, k: usize) -> usize {
        let id = nodes.len();
        let value: Vec<f64> = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
        nodes.push(Node {
            children: None,
            value,
            cover,
            impurity: 0.0,
            gain: 0.0,
        });
        if depth < max_depth && (depth == 0 || r.random_bool(0.75)) {
            let feature = r.random_range(0..d);
            let threshold = r.random_range(-1.0..1.0);
            let u = r.random_range(0.05..0.95);
            let left = grow(r, nodes, cover * u, depth + 1, d, max_depth, k);
            let right = grow(r, nodes, cover * (1.0 - u), depth + 1, d, max_depth, k);
            nodes[id].children = Some(Children {
                split: SplitSpec { feature, threshold },
                left,
                right,
            });
        }
        id
    }
    let mut r = stream(seed, 0);
    let mut nodes = Vec::new();
    grow(&mut r, &mut nodes, 100.0, 0, d, max_depth, k);
    Tree { nodes, n_features: d }
}

/// Largest absolute gap between TreeSHAP and the brute-force oracle over
/// all classes, plus the largest efficiency gap, for one random case.
pub fn shap_vs_oracle(seed: u64) -> (f64, f64) {
    let mut r = stream(seed, 1);
    let d = r.random_range(1..=10);
    let depth = r.random_range(1..=4);
    let k = 3;
    let tree = random_tree(seed, d, depth, k);
    let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.5..1.5)).collect();
    let outputs: Vec<Vec<f64>> = tree.nodes.iter().map(|n| n.value.clone()).collect();
    let (phi, base) = tree_shap_single(&tree, &outputs, &x).unwrap();
    let out = tree.predict(&x);
    let mut gap: f64 = 0.0;
    let mut eff: f64 = 0.0;
    for c in 0..k {
        let oracle = brute_shapley_oracle(d, |s| conditional_expectation(&tree, &x, s, &|i| tree.nodes[i].value[c])).unwrap();
        for j in 0..d {
            gap = gap.max((phi[j][c] - oracle[j]).abs());
        }
        let sum: f64 = base[c] + (0..d).map(|j| phi[j][c]).sum::<f64>();
        eff = eff.max((sum - out[c]).abs());
    }
    (gap, eff)
}
