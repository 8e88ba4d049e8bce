mod common;

use uavids_core::ensembles::softmax;
use uavids_core::tree::{leaf_weight, split_gain};

#[test]
fn softmax_derivatives_match_finite_differences() {
    for seed in 0..100 {
        let (g, h) = common::gradients::fd_case(seed);
        assert!(g <= 1e-6, "seed {seed}: gradient rel err {g}");
        assert!(h <= 1e-6, "seed {seed}: hessian rel err {h}");
    }
}

#[test]
fn softmax_is_shift_invariant_and_stable() {
    let a = softmax(&[1.0, 2.0, 3.0]);
    let b = softmax(&[1001.0, 1002.0, 1003.0]);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-15);
    }
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn leaf_weight_minimizes_second_order_objective() {
    // Objective g·w + ½(h+λ)w² is minimized at −g/(h+λ).
    let (g, h, l) = (-3.0, 2.0, 1.0);
    let w = leaf_weight(g, h, l);
    let obj = |w: f64| g * w + 0.5 * (h + l) * w * w;
    assert_eq!(w, 1.0);
    assert!(obj(w) < obj(w + 1e-3) && obj(w) < obj(w - 1e-3));
    let gain = split_gain(-3.0, 2.0, 3.0, 2.0, 1.0, 0.0);
    assert!((gain - 0.5 * (9.0 / 3.0 + 9.0 / 3.0 - 0.0)).abs() < 1e-12);
}
