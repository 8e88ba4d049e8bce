mod common;

use proptest::prelude::*;
use uavids_core::ensembles::*;
use uavids_core::ingest::LabelMap;
use uavids_core::metrics::evaluate_model;
use uavids_core::preprocess::{class_weights, FeatureTable};
use uavids_core::tree::{gini_impurity, FeatureSubset, SplitMode, Tree, TreeParams};
use uavids_core::Matrix;

fn table(x: Vec<Vec<f64>>, y: Vec<usize>, k: usize) -> FeatureTable {
    let d = x[0].len();
    let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    FeatureTable::new(
        (0..d).map(|j| format!("x{j}")).collect(),
        vec![false; d],
        Matrix::from_rows(&x),
        y,
        LabelMap::ordered(&names).unwrap(),
    )
    .unwrap()
}

fn check_tree_accounting(t: &Tree) {
    let mut reduction = 0.0;
    let mut scale: f64 = 1.0;
    for n in &t.nodes {
        scale = scale.max(n.cover);
        if let Some(c) = &n.children {
            let (l, r) = (&t.nodes[c.left], &t.nodes[c.right]);
            assert!((n.cover - l.cover - r.cover).abs() <= 1e-9 * scale);
            assert!(c.split.threshold.is_finite());
            reduction += n.gain;
        } else {
            assert!((n.value.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(n.value.iter().all(|v| *v >= 0.0));
        }
    }
    let root = &t.nodes[0];
    let leaves: f64 = t.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.cover * n.impurity).sum();
    assert!((reduction - (root.cover * root.impurity - leaves)).abs() <= 1e-9 * scale);
}

#[test]
fn separable_data_is_learned_by_forests_and_boosting() {
    let p = common::prepared(&common::binary_spec(1500, 1.0), 21);
    for kind in [ModelKind::RandomForest, ModelKind::ExtraTrees, ModelKind::GradBoostRegularized] {
        let m = fit_model(&ModelSpec::new(kind), &p.train, 3).unwrap();
        let r = evaluate_model(&m, &p.test).unwrap();
        assert!(r.accuracy >= 0.99, "{kind}: {}", r.accuracy);
        if !kind.is_boosting() {
            for t in &m.trees {
                check_tree_accounting(t);
            }
        }
    }
}

#[test]
fn same_seed_same_model() {
    let p = common::prepared(&common::binary_spec(300, 0.5), 2);
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind).with_estimators(10);
        assert_eq!(fit_model(&spec, &p.train, 5).unwrap(), fit_model(&spec, &p.train, 5).unwrap());
    }
}

#[test]
fn forest_with_best_splits_and_bootstrap_is_a_random_forest() {
    let p = common::prepared(&common::binary_spec(300, 0.5), 4);
    let cw = class_weights(&p.train.y, 2).unwrap().w;
    let params = TreeParams {
        split_mode: SplitMode::Best,
        ..Default::default()
    };
    let a = fit_forest(&p.train, &cw, 7, &params, true, 9).unwrap();
    let b = fit_random_forest(&p.train, &cw, 7, &TreeParams::default(), 9).unwrap();
    assert_eq!(a.trees, b.trees);
    let one = fit_random_forest(&p.train, &cw, 1, &TreeParams::default(), 9).unwrap();
    assert_eq!(one.trees[0], b.trees[0]);
    let proba = one.predict_proba(&p.test).unwrap();
    for i in 0..p.test.n_rows() {
        assert_eq!(proba.row(i), one.trees[0].predict(p.test.x.row(i)));
    }
}

#[test]
fn extra_trees_on_pure_data_predicts_that_class() {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
    let t = table(x, vec![1; 20], 3);
    let m = fit_extra_trees(&t, &[1.0; 3], 1, &TreeParams::default(), 0).unwrap();
    assert!(m.predict(&t).unwrap().iter().all(|&c| c == 1));
}

#[test]
fn adaboost_separates_one_dimensional_data() {
    let x: Vec<Vec<f64>> = (0..40).map(|i| vec![if i < 20 { i as f64 / 20.0 } else { 2.0 + i as f64 / 20.0 }, (i % 3) as f64]).collect();
    let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
    let t = table(x, y, 2);
    let mut spec = ModelSpec::new(ModelKind::Adaboost).with_estimators(10);
    spec.adaboost_variant = AdaBoostVariant::Paper;
    let m = fit_model(&spec, &t, 0).unwrap();
    assert!(m.trees.len() <= 10);
    assert_eq!(m.predict(&t).unwrap(), t.y);
    assert!(m.tree_weights.iter().all(|a| a.is_finite()));

    let single = fit_model(&spec.clone().with_estimators(1), &t, 0).unwrap();
    let pred = single.predict(&t).unwrap();
    for i in 0..t.n_rows() {
        assert_eq!(pred[i], argmax(single.trees[0].predict(t.x.row(i))));
    }
}

#[test]
fn alpha_examples() {
    assert_eq!(adaboost_alpha(0.5, 2, AdaBoostVariant::Paper).unwrap(), 0.0);
    assert!((adaboost_alpha(0.25, 2, AdaBoostVariant::Paper).unwrap() - 0.549306).abs() < 1e-6);
    assert!((adaboost_alpha(0.25, 10, AdaBoostVariant::Samme).unwrap() - 3.295837).abs() < 1e-6);
    assert!(adaboost_alpha(1.0, 2, AdaBoostVariant::Paper).is_err());
}

#[test]
fn boosting_without_steps_predicts_priors_and_loss_decreases() {
    let p = common::prepared(&common::binary_spec(400, 0.4), 6);
    let mut spec = ModelSpec::new(ModelKind::GradBoostRegularized).with_estimators(1);
    spec.use_class_weights = false;
    let mut bp = BoostParams::defaults(BoostMode::Regularized);
    bp.learning_rate = 0.0;
    spec.boost = Some(bp);
    let m = fit_model(&spec, &p.train, 0).unwrap();
    let counts = p.train.class_counts();
    let n = p.train.n_rows() as f64;
    let proba = m.predict_proba(&p.test).unwrap();
    for row in proba.iter_rows() {
        for (c, v) in row.iter().enumerate() {
            assert!((v - counts[c] as f64 / n).abs() < 1e-12);
        }
    }
    assert!(fit_model(&spec.clone().with_estimators(0), &p.train, 0).is_err());

    bp.learning_rate = 0.1;
    spec.boost = Some(bp);
    let m = fit_model(&spec.with_estimators(30), &p.train, 0).unwrap();
    let h = &m.train_meta.history;
    assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{h:?}");
    assert!(h.last() < h.first());
}

#[test]
fn importance_is_normalized_and_ignores_unused_features() {
    let p = common::prepared(&common::binary_spec(300, 1.0), 7);
    // Append a constant column, which no tree can split on.
    let d = p.train.n_features();
    let mut rows: Vec<Vec<f64>> = p.train.x.iter_rows().map(|r| r.to_vec()).collect();
    rows.iter_mut().for_each(|r| r.push(0.0));
    let mut names = p.train.feature_names.clone();
    names.push("constant".into());
    let mut cat = p.train.categorical.clone();
    cat.push(false);
    let t = FeatureTable::new(names, cat, Matrix::from_rows(&rows), p.train.y.clone(), p.train.class_names.clone()).unwrap();
    for kind in ModelKind::ALL {
        let m = fit_model(&ModelSpec::new(kind).with_estimators(10), &t, 1).unwrap();
        let imp = gini_importance(&m);
        let total: f64 = imp.iter().map(|f| f.importance).sum();
        assert!((total - 1.0).abs() <= 1e-9, "{kind}: {total}");
        assert_eq!(imp.iter().find(|f| f.feature == d).unwrap().importance, 0.0);
        assert!(imp.windows(2).all(|w| w[0].importance >= w[1].importance));
    }
}

#[test]
fn probabilities_are_normalized() {
    let p = common::prepared(&common::ten_class_spec(600), 8);
    for kind in ModelKind::ALL {
        let m = fit_model(&ModelSpec::new(kind).with_estimators(10), &p.train, 2).unwrap();
        let proba = m.predict_proba(&p.test).unwrap();
        for row in proba.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn doubled_rows_grow_the_same_tree() {
    let p = common::prepared(&common::binary_spec(200, 0.5), 9);
    let params = TreeParams {
        feature_subset: FeatureSubset::All,
        ..Default::default()
    };
    let idx: Vec<usize> = (0..p.train.n_rows()).chain(0..p.train.n_rows()).collect();
    let doubled = p.train.select_rows(&idx);
    let a = fit_extra_trees(&p.train, &[1.0, 1.0], 1, &TreeParams { split_mode: SplitMode::Best, ..params }, 0).unwrap();
    let b = fit_extra_trees(&doubled, &[1.0, 1.0], 1, &TreeParams { split_mode: SplitMode::Best, ..params }, 0).unwrap();
    let (ta, tb) = (&a.trees[0], &b.trees[0]);
    assert_eq!(ta.nodes.len(), tb.nodes.len());
    for (x, y) in ta.nodes.iter().zip(&tb.nodes) {
        assert_eq!(x.children.map(|c| c.split), y.children.map(|c| c.split));
        assert_eq!(x.value, y.value);
    }
}

#[test]
fn gini_examples() {
    assert_eq!(gini_impurity(&[4.0, 0.0]).unwrap(), 0.0);
    assert_eq!(gini_impurity(&[2.0, 2.0]).unwrap(), 0.5);
    assert!((gini_impurity(&[1.0, 2.0, 3.0]).unwrap() - (1.0 - 14.0 / 36.0)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ordered_codes_ignore_later_rows(
        cats in prop::collection::vec(0u8..3, 2..30),
        labels in prop::collection::vec(0usize..2, 30),
        cut in 0usize..30,
        seed in any::<u64>(),
    ) {
        let n = cats.len();
        let col: Vec<f64> = cats.iter().map(|&c| f64::from(c)).collect();
        let y = &labels[..n];
        let perm: Vec<usize> = (0..n).collect();
        let a = ordered_target_stats(&col, y, &perm, &[0.5, 0.5], 1.0);
        // Shuffle the labels of rows after the cut.
        let cut = cut.min(n);
        let mut y2 = y.to_vec();
        let mut r = uavids_core::rng::stream(seed, 0);
        rand::seq::SliceRandom::shuffle(&mut y2[cut..], &mut r);
        let b = ordered_target_stats(&col, &y2, &perm, &[0.5, 0.5], 1.0);
        for i in 0..cut.min(n) {
            prop_assert_eq!(a.row(i), b.row(i));
        }
    }
}
