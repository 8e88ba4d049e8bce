mod common;

use rand::Rng;
use uavids_core::ensembles::{fit_model, ModelKind, ModelSpec};
use uavids_core::explain::*;
use uavids_core::ingest::{LabelMap, SynthSpec};
use uavids_core::metrics::LabelMetric;
use uavids_core::preprocess::FeatureTable;
use uavids_core::tree::{FeatureSubset, TreeParams};
use uavids_core::{Error, Matrix, Result};

/// Predicts class 1 iff x0 > 0.
struct Stump {
    names: Vec<String>,
}

impl ProbabilisticClassifier for Stump {
    fn n_classes(&self) -> usize {
        2
    }
    fn feature_names(&self) -> &[String] {
        &self.names
    }
    fn predict_proba_matrix(&self, x: &Matrix) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = x
            .iter_rows()
            .map(|r| if r[0] > 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
            .collect();
        Ok(Matrix::from_rows(&rows))
    }
}

fn stump_table(n: usize, p1: f64, seed: u64) -> FeatureTable {
    let mut r = uavids_core::rng::stream(seed, 0);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let c = usize::from(r.random_bool(p1));
        let x0 = if c == 1 { r.random_range(0.1..2.0) } else { r.random_range(-2.0..-0.1) };
        rows.push(vec![x0, r.random_range(-1.0..1.0), 0.5]);
        y.push(c);
    }
    FeatureTable::new(
        vec!["signal".into(), "noise".into(), "constant".into()],
        vec![false; 3],
        Matrix::from_rows(&rows),
        y,
        LabelMap::ordered(&["neg", "pos"]).unwrap(),
    )
    .unwrap()
}

#[test]
fn permutation_importance_of_stump() {
    let t = stump_table(2000, 0.3, 1);
    let m = Stump {
        names: t.feature_names.clone(),
    };
    let pi = permutation_importance(&m, &t, LabelMetric::Accuracy, 30, 7).unwrap();
    assert_eq!(pi.baseline, 1.0);
    assert_eq!(pi.rows[0].name, "signal");
    let p = t.y.iter().filter(|&&v| v == 1).count() as f64 / t.n_rows() as f64;
    let chance = p * p + (1.0 - p) * (1.0 - p);
    assert!((pi.rows[0].mean - (1.0 - chance)).abs() < 0.03, "{}", pi.rows[0].mean);
    for row in &pi.rows[1..] {
        assert!(row.mean.abs() <= 3.0 * row.std / (30f64).sqrt() + 1e-12);
        assert!(row.std >= 0.0);
    }
    let constant = pi.rows.iter().find(|r| r.name == "constant").unwrap();
    assert_eq!((constant.mean, constant.std), (0.0, 0.0));
    assert_eq!(permutation_importance(&m, &t, LabelMetric::Accuracy, 30, 7).unwrap(), pi);
    assert!(permutation_importance(&m, &t, LabelMetric::Accuracy, 0, 7).is_err());
}

#[test]
fn lime_on_fitted_stump_picks_split_feature() {
    let p = common::prepared(&common::binary_spec(400, 1.0), 3);
    let mut spec = ModelSpec::new(ModelKind::RandomForest).with_estimators(1);
    spec.tree = Some(TreeParams {
        max_depth: Some(1),
        feature_subset: FeatureSubset::All,
        ..Default::default()
    });
    let m = fit_model(&spec, &p.train, 0).unwrap();
    let split = m.trees[0].nodes[0].children.unwrap().split;
    let mut x = p.test.x.row(0).to_vec();
    x[split.feature] = split.threshold + 0.05;
    let opts = LimeOptions::default();
    let e = lime_explain(&m, &x, &opts, 5).unwrap();
    assert_eq!(e.classes[1].top[0].feature, split.feature);
    assert!(e.classes.iter().all(|c| (0.0..=1.0).contains(&c.r2)));
    assert_eq!(lime_explain(&m, &x, &opts, 5).unwrap(), e);
    assert_ne!(lime_explain(&m, &x, &opts, 6).unwrap(), e);
}

fn ablation_spec() -> SynthSpec {
    SynthSpec {
        n_rows: 600,
        n_numeric: 3,
        n_noise: 3,
        n_categorical: 0,
        n_classes: 3,
        class_weights: vec![],
        separability: 1.0,
        missing_fraction: 0.0,
        class_names: None,
    }
}

#[test]
fn ablation_configurations() {
    let ds = common::dataset(&ablation_spec(), 2);
    let spec = ModelSpec::new(ModelKind::RandomForest).with_estimators(20);
    let cfg = AblationConfig {
        subset_sizes: vec![3],
        exclusion_groups: vec![ExclusionGroup {
            name: "informative".into(),
            patterns: vec!["F0".into()],
        }],
        k_folds: 3,
        ..Default::default()
    };
    let rep = ablation_study(&spec, &ds, &cfg, 4).unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert_eq!(rep.rows[0].delta, 0.0);
    assert_eq!(rep.rows[0].features.len(), 6);
    let mut top: Vec<String> = rep.rows[1].features.clone();
    top.sort();
    assert_eq!(top, vec!["f00", "f01", "f02"]);
    assert!(rep.rows[1].delta.abs() <= 0.02);
    assert!(rep.rows[2].features.iter().all(|f| f.starts_with("noise")));
    assert!(rep.rows[2].delta < -0.3);

    for source in [RankingSource::Permutation, RankingSource::Shap] {
        let c = AblationConfig {
            source,
            subset_sizes: vec![3],
            k_folds: 3,
            shap_rows: 50,
            ..Default::default()
        };
        let r = ablation_study(&spec.clone().with_estimators(10), &ds, &c, 4).unwrap();
        let mut top: Vec<&str> = r.ranking.iter().take(3).map(|(n, _)| n.as_str()).collect();
        top.sort();
        assert_eq!(top, vec!["f00", "f01", "f02"], "{source:?}");
    }

    let empty = AblationConfig {
        exclusion_groups: vec![ExclusionGroup {
            name: "everything".into(),
            patterns: vec!["0".into()],
        }],
        subset_sizes: vec![],
        k_folds: 3,
        ..Default::default()
    };
    assert!(matches!(ablation_study(&spec, &ds, &empty, 0), Err(Error::NothingLeft(_))));
}
