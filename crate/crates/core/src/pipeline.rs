//! Glue between ingestion, preprocessing and model fitting.
//!
//! The recipe is always fitted after the split, on the training rows only,
//! unless `fit_on_all` asks for the fit-before-split order.

use rayon::prelude::*;

use crate::ensembles::{fit_model, ModelSpec};
use crate::error::{Error, Result};
use crate::ingest::{infer_schema, Cell, ColumnSpec, LabelMap, RawTable, LABEL_COLUMN};
use crate::metrics::LabelMetric;
use crate::preprocess::{
    apply_recipe, fit_recipe, stratified_kfold, stratified_split_indices, ApplyReport, FeatureTable,
    PreprocessRecipe,
};
use crate::rng::derive_seed;

/// Tags separating the seeds of nested stages.
pub mod seed_tags {
    pub const SPLIT: u64 = 1;
    pub const MODEL: u64 = 2;
    pub const FOLDS: u64 = 3;
    pub const FOLD_MODEL: u64 = 4;
    pub const BOOTSTRAP: u64 = 5;
    pub const PERMUTATION: u64 = 6;
    pub const LIME: u64 = 7;
}

/// A raw table together with its label mapping and feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub table: RawTable,
    pub schema: Vec<ColumnSpec>,
    pub label_column: String,
    pub label_map: LabelMap,
}

impl RawDataset {
    /// Infers the schema of every non-label column.
    pub fn new(table: RawTable, label_map: LabelMap) -> Result<Self> {
        Self::with_label_column(table, label_map, LABEL_COLUMN)
    }

    pub fn with_label_column(table: RawTable, label_map: LabelMap, label_column: &str) -> Result<Self> {
        if table.column(label_column).is_none() {
            return Err(Error::SchemaMismatch(format!("no label column `{label_column}`")));
        }
        let schema = infer_schema(&table.retain_columns(|n| n != label_column))?;
        Ok(RawDataset {
            table,
            schema,
            label_column: label_column.to_string(),
            label_map,
        })
    }

    pub fn labels(&self) -> Result<Vec<usize>> {
        let col = self
            .table
            .column(&self.label_column)
            .ok_or_else(|| Error::SchemaMismatch(format!("no label column `{}`", self.label_column)))?;
        col.values
            .iter()
            .map(|v| {
                let name = v.as_category().unwrap_or_default();
                self.label_map.index_of(&name).ok_or(Error::UnknownClass(name))
            })
            .collect()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.schema.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> RawDataset {
        RawDataset {
            table: self.table.select_rows(idx),
            schema: self.schema.clone(),
            label_column: self.label_column.clone(),
            label_map: self.label_map.clone(),
        }
    }

    /// Keep the features whose name satisfies `keep`; the label column stays.
    pub fn select_features(&self, mut keep: impl FnMut(&str) -> bool) -> RawDataset {
        let label = self.label_column.clone();
        RawDataset {
            table: self.table.retain_columns(|n| n == label || keep(n)),
            schema: self.schema.iter().filter(|s| keep(&s.name)).cloned().collect(),
            label_column: self.label_column.clone(),
            label_map: self.label_map.clone(),
        }
    }

    /// Rows whose label cell is missing cannot be used and are reported.
    pub fn unlabeled_rows(&self) -> usize {
        self.table
            .column(&self.label_column)
            .map_or(0, |c| c.values.iter().filter(|v| matches!(v, Cell::Missing)).count())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub train: FeatureTable,
    pub test: FeatureTable,
    pub recipe: PreprocessRecipe,
    pub test_report: ApplyReport,
}

/// Fit the recipe on `train_idx` (or on every row with `fit_on_all`) and
/// apply it to both index sets.
pub fn prepare(ds: &RawDataset, train_idx: &[usize], test_idx: &[usize], fit_on_all: bool) -> Result<Prepared> {
    let train_raw = ds.table.select_rows(train_idx);
    let test_raw = ds.table.select_rows(test_idx);
    let recipe = if fit_on_all {
        fit_recipe(&ds.table, &ds.schema, &ds.label_column, &ds.label_map)?
    } else {
        fit_recipe(&train_raw, &ds.schema, &ds.label_column, &ds.label_map)?
    };
    let (train, _) = apply_recipe(&recipe, &train_raw)?;
    let (test, test_report) = apply_recipe(&recipe, &test_raw)?;
    Ok(Prepared {
        train,
        test,
        recipe,
        test_report,
    })
}

/// Stratified holdout split followed by [`prepare`].
pub fn split_and_prepare(ds: &RawDataset, train_fraction: f64, seed: u64, fit_on_all: bool) -> Result<Prepared> {
    let y = ds.labels()?;
    let (tr, te) = stratified_split_indices(&y, &ds.label_map, train_fraction, derive_seed(seed, seed_tags::SPLIT))?;
    prepare(ds, &tr, &te, fit_on_all)
}

/// Per-fold scores of several models on identical folds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoldScores {
    pub models: Vec<String>,
    pub metric: LabelMetric,
    /// `scores[m][f]` is model `m` on fold `f`.
    pub scores: Vec<Vec<f64>>,
    pub fold_sizes: Vec<usize>,
}

impl FoldScores {
    pub fn n_folds(&self) -> usize {
        self.fold_sizes.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.scores
            .iter()
            .map(|s| s.iter().sum::<f64>() / s.len() as f64)
            .collect()
    }
}

/// Stratified k-fold cross-validation with the recipe refitted on each
/// fold's training part. Every model sees the same folds and the same
/// per-fold seed; fold × model fits run in parallel.
pub fn cross_validate(
    specs: &[(String, ModelSpec)],
    ds: &RawDataset,
    k_folds: usize,
    metric: LabelMetric,
    seed: u64,
) -> Result<FoldScores> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no models to cross-validate".into()));
    }
    let y = ds.labels()?;
    let folds = stratified_kfold(&y, &ds.label_map, k_folds, derive_seed(seed, seed_tags::FOLDS))?;
    let prepared: Vec<Prepared> = folds
        .par_iter()
        .map(|test_idx| {
            let train_idx = complement(y.len(), test_idx);
            prepare(ds, &train_idx, test_idx, false)
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|m| (0..k_folds).map(move |f| (m, f)))
        .collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let p = &prepared[f];
            let fold_seed = derive_seed(derive_seed(seed, seed_tags::FOLD_MODEL), f as u64);
            let model = fit_model(&specs[m].1, &p.train, fold_seed)?;
            let y_hat = model.predict(&p.test)?;
            metric.score(&p.test.y, &y_hat, p.test.n_classes())
        })
        .collect::<Result<_>>()?;
    let scores = (0..specs.len())
        .map(|m| results[m * k_folds..(m + 1) * k_folds].to_vec())
        .collect();
    Ok(FoldScores {
        models: specs.iter().map(|(n, _)| n.clone()).collect(),
        metric,
        scores,
        fold_sizes: folds.iter().map(Vec::len).collect(),
    })
}

fn complement(n: usize, sorted_subset: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted_subset.len());
    let mut it = sorted_subset.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
