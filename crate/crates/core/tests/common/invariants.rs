//! Pipeline invariants and a determinism fingerprint shared by the
//! integration and acceptance tests.

use uavids_core::ensembles::{fit_model, io, ModelKind, ModelSpec};
use uavids_core::explain::{permutation_importance, shap_summary};
use uavids_core::metrics::LabelMetric;
use uavids_core::pipeline::{cross_validate, split_and_prepare};
use uavids_core::preprocess::ColumnRecipe;
use uavids_core::statcompare::bootstrap_diff_ci;

use super::{dataset, ten_class_spec};

/// Missing-free output, exact standardization of training columns and
/// per-class split proportions within one row.
pub fn pipeline_invariants(seed: u64) -> Result<(), String> {
    let ds = dataset(&ten_class_spec(2000), seed);
    let missing: usize = ds
        .table
        .columns()
        .iter()
        .map(|c| c.values.iter().filter(|v| v.is_missing()).count())
        .sum();
    if missing == 0 {
        return Err("fixture has no missing cells".into());
    }
    let p = split_and_prepare(&ds, 0.8, seed, false).map_err(|e| e.to_string())?;
    for t in [&p.train, &p.test] {
        if t.x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err("non-finite value after preprocessing".into());
        }
    }
    let n = p.train.n_rows() as f64;
    for (j, name) in p.train.feature_names.iter().enumerate() {
        let Some(ColumnRecipe::Numeric { std, .. }) = p.recipe.columns.get(name) else {
            continue;
        };
        if *std == 0.0 {
            continue;
        }
        let col = p.train.x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if mean.abs() > 1e-9 || (var - 1.0).abs() > 1e-9 {
            return Err(format!("{name}: mean {mean}, variance {var}"));
        }
    }
    let y = ds.labels().map_err(|e| e.to_string())?;
    let train_counts = p.train.class_counts();
    let test_counts = p.test.class_counts();
    for k in 0..ds.label_map.len() {
        let total = y.iter().filter(|&&v| v == k).count();
        let expect = 0.8 * total as f64;
        if (train_counts[k] as f64 - expect).abs() > 1.0 || train_counts[k] + test_counts[k] != total {
            return Err(format!("class {k}: {} train rows of {total}", train_counts[k]));
        }
    }
    Ok(())
}

/// Serialized outputs of every stochastic stage.
pub fn fingerprint(seed: u64) -> Vec<u8> {
    let ds = dataset(&ten_class_spec(800), seed);
    let p = split_and_prepare(&ds, 0.8, seed, false).unwrap();
    let mut out = Vec::new();
    let mut preds = Vec::new();
    for kind in ModelKind::ALL {
        let m = fit_model(&ModelSpec::new(kind).with_estimators(8), &p.train, seed).unwrap();
        out.extend(io::to_bytes(&m).unwrap());
        let proba = m.predict_proba(&p.test).unwrap();
        out.extend(proba.as_slice().iter().flat_map(|v| v.to_bits().to_le_bytes()));
        preds.push(m.predict(&p.test).unwrap());
        if kind == ModelKind::RandomForest {
            let pi = permutation_importance(&m, &p.test, LabelMetric::Accuracy, 3, seed).unwrap();
            out.extend(serde_json::to_vec(&pi).unwrap());
            let s = shap_summary(&m, &p.test, 0, Some(5), Some(50), seed).unwrap();
            out.extend(serde_json::to_vec(&s).unwrap());
        }
    }
    let specs = vec![
        ("rf".to_string(), ModelSpec::new(ModelKind::RandomForest).with_estimators(5)),
        ("gbr".to_string(), ModelSpec::new(ModelKind::GradBoostRegularized).with_estimators(5)),
    ];
    let fs = cross_validate(&specs, &ds, 3, LabelMetric::F1Macro, seed).unwrap();
    out.extend(serde_json::to_vec(&fs).unwrap());
    let ci = bootstrap_diff_ci(&preds[0], &preds[2], &p.test.y, 10, LabelMetric::F1Macro, 1000, 0.95, seed).unwrap();
    out.extend(serde_json::to_vec(&ci).unwrap());
    out
}

pub fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}
