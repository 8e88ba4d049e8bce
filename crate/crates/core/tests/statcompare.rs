use proptest::prelude::*;
use rand::Rng;
use uavids_core::metrics::LabelMetric;
use uavids_core::pipeline::FoldScores;
use uavids_core::rng::stream;
use uavids_core::statcompare::*;

/// Exact p-values by enumerating every sign pattern of the ranked
/// |differences|.
fn brute_wilcoxon(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let rank = |i: usize| -> f64 {
        let less = abs.iter().filter(|v| **v < abs[i]).count() as f64;
        let eq = abs.iter().filter(|v| **v == abs[i]).count() as f64;
        less + (eq + 1.0) / 2.0
    };
    let ranks: Vec<f64> = (0..n).map(rank).collect();
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let (mut ge, mut le) = (0.0, 0.0);
    for mask in 0..1u32 << n {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            ge += 1.0;
        }
        if w <= observed + 1e-9 {
            le += 1.0;
        }
    }
    let total = 2f64.powi(n as i32);
    (ge / total, (2.0 * (ge / total).min(le / total)).min(1.0))
}

#[test]
fn wilcoxon_matches_enumeration() {
    for seed in 0..400 {
        let mut r = stream(seed, 0);
        let n = r.random_range(1..=12);
        // Coarse values produce zero differences and tied magnitudes.
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64 / 4.0).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64 / 4.0).collect();
        let (greater, two) = brute_wilcoxon(&a, &b);
        let g = wilcoxon_signed_rank(&a, &b, Alternative::Greater).unwrap();
        let t = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).unwrap();
        if g.degenerate {
            assert!(a.iter().zip(&b).all(|(x, y)| x == y));
            continue;
        }
        assert!((g.p_value - greater).abs() <= 1e-12, "seed {seed}");
        assert!((t.p_value - two).abs() <= 1e-12, "seed {seed}");
    }
}

#[test]
fn wilcoxon_large_sample_uses_normal_approximation() {
    let a: Vec<f64> = (0..40).map(|i| i as f64 * 0.01 + 0.5).collect();
    let b: Vec<f64> = (0..40).map(|i| i as f64 * 0.01 + if i % 3 == 0 { 0.6 } else { 0.45 }).collect();
    let r = wilcoxon_signed_rank(&a, &b, Alternative::Greater).unwrap();
    assert!(!r.exact);
    assert!(r.p_value > 0.0 && r.p_value <= 1.0);
}

#[test]
fn table7_p_values_and_holm() {
    let a = [0.9999, 0.9998, 0.9997, 0.9999, 0.9996];
    let b = [0.9990, 0.9991, 0.9992, 0.9989, 0.9990];
    assert_eq!(wilcoxon_signed_rank(&a, &b, Alternative::Greater).unwrap().p_value, 0.03125);
    let adj = holm_adjust(&[0.03125, 0.03125, 0.03125, 0.15625]).unwrap();
    assert_eq!(adj, vec![0.125, 0.125, 0.125, 0.15625]);
}

#[test]
fn friedman_matches_rank_sum_formula() {
    for seed in 0..100 {
        let mut r = stream(seed, 1);
        let k = r.random_range(2..=6);
        let n = r.random_range(2..=8);
        let scores: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| r.random_range(0..4) as f64 / 4.0).collect())
            .collect();
        let mut rank_sums = vec![0.0; k];
        for f in 0..n {
            for m in 0..k {
                let better = (0..k).filter(|&o| scores[o][f] > scores[m][f]).count() as f64;
                let same = (0..k).filter(|&o| scores[o][f] == scores[m][f]).count() as f64;
                rank_sums[m] += better + (same + 1.0) / 2.0;
            }
        }
        let (kf, nf) = (k as f64, n as f64);
        let expect = 12.0 / (nf * kf * (kf + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * nf * (kf + 1.0);
        let fs = FoldScores {
            models: (0..k).map(|m| format!("m{m}")).collect(),
            metric: LabelMetric::F1Macro,
            scores,
            fold_sizes: vec![1; n],
        };
        let got = friedman_test(&fs).unwrap();
        assert!((got.statistic - expect).abs() <= 1e-9, "seed {seed}");
        assert!((0.0..=1.0).contains(&got.p_value));
    }
}

#[test]
fn mcnemar_from_predictions() {
    // b = 3 (A right, B wrong), c = 1.
    let y = vec![0usize; 10];
    let a = vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1];
    let b = vec![0, 0, 0, 0, 1, 1, 1, 0, 1, 1];
    let r = mcnemar_test(&y, &a, &b).unwrap();
    assert_eq!((r.table.b, r.table.c), (3, 1));
    assert_eq!(r.table.both_correct, 4);
    assert_eq!(r.table.both_wrong, 2);
    assert!((r.chi2 - 0.25).abs() < 1e-12);
    assert!((r.p_value - 0.617075).abs() < 1e-6);
}

#[test]
fn bootstrap_is_seeded_and_centered() {
    let mut r = stream(3, 0);
    let y: Vec<usize> = (0..300).map(|_| r.random_range(0..3)).collect();
    let a: Vec<usize> = y.iter().map(|&v| if r.random_bool(0.9) { v } else { (v + 1) % 3 }).collect();
    let b: Vec<usize> = y.iter().map(|&v| if r.random_bool(0.7) { v } else { (v + 1) % 3 }).collect();
    let x = bootstrap_diff_ci(&a, &b, &y, 3, LabelMetric::Accuracy, 2000, 0.95, 11).unwrap();
    let z = bootstrap_diff_ci(&a, &b, &y, 3, LabelMetric::Accuracy, 2000, 0.95, 11).unwrap();
    assert_eq!(x, z);
    assert!(x.ci_low <= x.mean_diff && x.mean_diff <= x.ci_high);
    assert!(x.ci_low > 0.0);
    let same = bootstrap_diff_ci(&a, &a, &y, 3, LabelMetric::F1Macro, 1000, 0.9, 1).unwrap();
    assert_eq!((same.ci_low, same.ci_high, same.mean_diff), (0.0, 0.0, 0.0));
    assert!(bootstrap_diff_ci(&a, &b, &y, 3, LabelMetric::Accuracy, 999, 0.95, 1).is_err());
}

#[test]
fn compare_models_reports_every_pair() {
    let fs = FoldScores {
        models: vec!["rf".into(), "et".into(), "ada".into()],
        metric: LabelMetric::F1Macro,
        scores: vec![
            vec![0.99, 0.98, 0.99, 0.97, 0.99],
            vec![0.97, 0.97, 0.96, 0.96, 0.98],
            vec![0.20, 0.25, 0.22, 0.18, 0.21],
        ],
        fold_sizes: vec![20; 5],
    };
    let y = vec![0, 1, 2, 0, 1, 2, 0, 1];
    let h = HoldoutPredictions {
        y_true: y.clone(),
        n_classes: 3,
        predictions: vec![y.clone(), vec![0, 1, 2, 0, 1, 1, 0, 1], vec![0; 8]],
    };
    let opts = CompareOptions {
        bootstrap_iterations: 1000,
        ..Default::default()
    };
    let rep = compare_models(&fs, 0, Some(&h), &opts).unwrap();
    assert_eq!(rep.pairwise.len(), 2);
    for p in &rep.pairwise {
        assert_eq!(p.wilcoxon.p_value, 0.03125);
        assert_eq!(p.p_holm, 0.0625);
        assert!(p.bootstrap.is_some() && p.mcnemar.is_some());
    }
    assert_eq!(rep.friedman.mean_ranks, vec![1.0, 2.0, 3.0]);
}

proptest! {
    #[test]
    fn holm_is_monotone_and_bounded(p in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let adj = holm_adjust(&p).unwrap();
        for (raw, a) in p.iter().zip(&adj) {
            prop_assert!(*a >= *raw && *a <= 1.0);
        }
        for i in 0..p.len() {
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(adj[i] <= adj[j] || p[i] == p[j]);
                }
            }
        }
    }

    #[test]
    fn average_ranks_sum_to_triangle(v in prop::collection::vec(0u8..5, 1..30)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let r = average_ranks(&v, false);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }
}
