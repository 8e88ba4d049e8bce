//! Imputation, z-scoring, label encoding, stratified splitting and class
//! weights.

use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, Cell, ColumnKind, ColumnSpec, LabelMap, RawTable, TableSidecar};
use crate::matrix::Matrix;
use crate::rng;

/// Fitted statistics for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ColumnRecipe {
    Numeric {
        median: f64,
        mean: f64,
        std: f64,
    },
    Categorical {
        mode: String,
        encoding: IndexMap<String, usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessRecipe {
    pub columns: IndexMap<String, ColumnRecipe>,
    pub label_column: String,
    pub label_map: LabelMap,
}

/// Labelled numeric design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    /// `true` for integer-coded categorical features.
    pub categorical: Vec<bool>,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub class_names: LabelMap,
}

impl FeatureTable {
    /// Validates shapes, label range and finiteness.
    pub fn new(
        feature_names: Vec<String>,
        categorical: Vec<bool>,
        x: Matrix,
        y: Vec<usize>,
        class_names: LabelMap,
    ) -> Result<Self> {
        if feature_names.len() != x.cols() || categorical.len() != x.cols() {
            return Err(Error::SchemaMismatch(format!(
                "{} names / {} kind flags for {} columns",
                feature_names.len(),
                categorical.len(),
                x.cols()
            )));
        }
        if y.len() != x.rows() {
            return Err(Error::SchemaMismatch(format!(
                "{} labels for {} rows",
                y.len(),
                x.rows()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&v| v >= class_names.len()) {
            return Err(Error::InvalidLabel {
                label: bad,
                n_classes: class_names.len(),
            });
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemaMismatch("feature matrix has non-finite values".into()));
        }
        Ok(FeatureTable {
            feature_names,
            categorical,
            x,
            y,
            class_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            feature_names: self.feature_names.clone(),
            categorical: self.categorical.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn select_features(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            categorical: idx.iter().map(|&j| self.categorical[j]).collect(),
            x: self.x.select_cols(idx),
            y: self.y.clone(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Counts of test-time category values absent from the fitted encoding.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub unseen_categories: BTreeMap<String, usize>,
}

impl ApplyReport {
    pub fn total_unseen(&self) -> usize {
        self.unseen_categories.values().sum()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fit_column(name: &str, kind: ColumnKind, values: &[Cell]) -> Result<ColumnRecipe> {
    let all_missing = || Error::AllMissingColumn {
        column: name.to_string(),
    };
    match kind {
        ColumnKind::Numeric => {
            let mut present = Vec::with_capacity(values.len());
            for v in values {
                match v {
                    Cell::Missing => {}
                    Cell::Number(x) => present.push(*x),
                    Cell::Text(s) => {
                        return Err(Error::SchemaMismatch(format!(
                            "numeric column `{name}` holds text `{s}`"
                        )))
                    }
                }
            }
            if present.is_empty() {
                return Err(all_missing());
            }
            let med = median(present.clone());
            let n = values.len() as f64;
            let filled = values.iter().map(|v| match v {
                Cell::Number(x) => *x,
                _ => med,
            });
            let mean = filled.clone().sum::<f64>() / n;
            let var = filled.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            Ok(ColumnRecipe::Numeric {
                median: med,
                mean,
                std: var.sqrt(),
            })
        }
        ColumnKind::Categorical => {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for v in values {
                if let Some(s) = v.as_category() {
                    *counts.entry(s).or_default() += 1;
                }
            }
            // BTreeMap iterates lexicographically, so max_by keeping the first
            // maximum breaks ties towards the smallest value.
            let mode = counts
                .iter()
                .fold(None::<(&String, usize)>, |best, (k, &c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((k, c)),
                })
                .map(|(k, _)| k.clone())
                .ok_or_else(all_missing)?;
            let encoding = counts.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
            Ok(ColumnRecipe::Categorical { mode, encoding })
        }
    }
}

/// Fit imputation, scaling and encoding statistics on `t`.
pub fn fit_recipe(
    t: &RawTable,
    schema: &[ColumnSpec],
    label_column: &str,
    label_map: &LabelMap,
) -> Result<PreprocessRecipe> {
    if t.column(label_column).is_none() {
        return Err(Error::SchemaMismatch(format!("no label column `{label_column}`")));
    }
    let features: Vec<_> = t
        .columns()
        .iter()
        .filter(|c| c.name != label_column)
        .collect();
    let fitted: Vec<(String, ColumnRecipe)> = features
        .par_iter()
        .map(|c| {
            let spec = schema.iter().find(|s| s.name == c.name).ok_or_else(|| {
                Error::SchemaMismatch(format!("schema has no entry for column `{}`", c.name))
            })?;
            Ok((c.name.clone(), fit_column(&c.name, spec.kind, &c.values)?))
        })
        .collect::<Result<_>>()?;
    Ok(PreprocessRecipe {
        columns: fitted.into_iter().collect(),
        label_column: label_column.to_string(),
        label_map: label_map.clone(),
    })
}

fn apply_column(recipe: &ColumnRecipe, values: Option<&[Cell]>, n: usize) -> (Vec<f64>, usize) {
    match recipe {
        ColumnRecipe::Numeric { median, mean, std } => {
            let z = |x: f64| if *std > 0.0 { (x - mean) / std } else { 0.0 };
            let out = match values {
                None => vec![z(*median); n],
                Some(vs) => vs
                    .iter()
                    .map(|v| match v {
                        Cell::Number(x) => z(*x),
                        // Text in a numeric column cannot be scaled; treat as missing.
                        _ => z(*median),
                    })
                    .collect(),
            };
            (out, 0)
        }
        ColumnRecipe::Categorical { mode, encoding } => {
            let reserved = encoding.len() as f64;
            let mode_code = encoding[mode] as f64;
            let mut unseen = 0;
            let out = match values {
                None => vec![mode_code; n],
                Some(vs) => vs
                    .iter()
                    .map(|v| match v.as_category() {
                        None => mode_code,
                        Some(s) => match encoding.get(&s) {
                            Some(&c) => c as f64,
                            None => {
                                unseen += 1;
                                reserved
                            }
                        },
                    })
                    .collect(),
            };
            (out, unseen)
        }
    }
}

/// Replay a fitted recipe. Columns missing from `t` are imputed entirely;
/// columns in `t` the recipe does not know are an error.
pub fn apply_recipe(r: &PreprocessRecipe, t: &RawTable) -> Result<(FeatureTable, ApplyReport)> {
    for c in t.columns() {
        if c.name != r.label_column && !r.columns.contains_key(&c.name) {
            return Err(Error::SchemaMismatch(format!(
                "column `{}` is not part of the recipe",
                c.name
            )));
        }
    }
    let label = t
        .column(&r.label_column)
        .ok_or_else(|| Error::SchemaMismatch(format!("no label column `{}`", r.label_column)))?;
    let y: Vec<usize> = label
        .values
        .iter()
        .map(|v| {
            let name = v.as_category().unwrap_or_default();
            r.label_map.index_of(&name).ok_or(Error::UnknownClass(name))
        })
        .collect::<Result<_>>()?;

    let n = t.row_count();
    let entries: Vec<(&String, &ColumnRecipe)> = r.columns.iter().collect();
    let cols: Vec<(Vec<f64>, usize)> = entries
        .par_iter()
        .map(|(name, rec)| apply_column(rec, t.column(name).map(|c| c.values.as_slice()), n))
        .collect();

    let d = cols.len();
    let mut data = vec![0.0; n * d];
    let mut report = ApplyReport::default();
    for (j, (col, unseen)) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * d + j] = *v;
        }
        if *unseen > 0 {
            report.unseen_categories.insert(entries[j].0.clone(), *unseen);
        }
    }
    let table = FeatureTable::new(
        entries.iter().map(|(n, _)| (*n).clone()).collect(),
        entries
            .iter()
            .map(|(_, rec)| matches!(rec, ColumnRecipe::Categorical { .. }))
            .collect(),
        Matrix::from_vec(n, d, data),
        y,
        r.label_map.clone(),
    )?;
    Ok((table, report))
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if train_fraction > 0.0 && train_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )))
    }
}

fn rows_by_class(y: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut by = vec![Vec::new(); k];
    for (i, &c) in y.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidLabel {
                label: c,
                n_classes: k,
            });
        }
        by[c].push(i);
    }
    Ok(by)
}

/// Stratified split on labels alone. Returns sorted (train, test) row indices.
///
/// Class `k` contributes `round(train_fraction · n_k)` rows to train, clamped
/// to `[1, n_k − 1]`, drawn by a seeded shuffle within the class. Classes
/// with no rows are skipped.
pub fn stratified_split_indices(
    y: &[usize],
    class_names: &LabelMap,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(train_fraction)?;
    let by = rows_by_class(y, class_names.len())?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, mut rows) in by.into_iter().enumerate() {
        let n = rows.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::StratificationImpossible {
                class: class_names.name_of(k).unwrap_or_default().to_string(),
                count: n,
            });
        }
        let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        rows.shuffle(&mut rng::stream(seed, k as u64));
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(
    t: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    let (train, test) = stratified_split_indices(&t.y, &t.class_names, train_fraction, seed)?;
    Ok((t.select_rows(&train), t.select_rows(&test)))
}

/// Stratified k-fold assignment; returns the sorted test indices of each fold.
///
/// Rows of each class are shuffled and dealt round-robin, continuing the deal
/// across classes so fold sizes differ by at most one.
pub fn stratified_kfold(
    y: &[usize],
    class_names: &LabelMap,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > y.len() {
        return Err(Error::InvalidArgument(format!(
            "{folds} folds for {} rows",
            y.len()
        )));
    }
    let by = rows_by_class(y, class_names.len())?;
    let mut out = vec![Vec::new(); folds];
    let mut cursor = 0;
    for (k, mut rows) in by.into_iter().enumerate() {
        if rows.len() == 1 {
            return Err(Error::StratificationImpossible {
                class: class_names.name_of(k).unwrap_or_default().to_string(),
                count: 1,
            });
        }
        rows.shuffle(&mut rng::stream(seed, k as u64));
        for r in rows {
            out[cursor % folds].push(r);
            cursor += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Balanced class weights `w_k = N / (K · n_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w: Vec<f64>,
}

impl ClassWeights {
    pub fn sample_weights(&self, y: &[usize]) -> Vec<f64> {
        y.iter().map(|&c| self.w[c]).collect()
    }
}

pub fn class_weights(y: &[usize], k: usize) -> Result<ClassWeights> {
    let mut counts = vec![0usize; k];
    for &c in y {
        if c >= k {
            return Err(Error::InvalidLabel {
                label: c,
                n_classes: k,
            });
        }
        counts[c] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass { class: missing });
    }
    let n = y.len() as f64;
    Ok(ClassWeights {
        w: counts.iter().map(|&c| n / (k as f64 * c as f64)).collect(),
    })
}

/// Persist a feature table as canonical CSV plus sidecar.
pub fn write_feature_table(stem: &Path, t: &FeatureTable) -> Result<()> {
    let (csv_path, json_path) = ingest::canonical_paths(stem);
    let mut header = t.feature_names.clone();
    header.push(ingest::LABEL_COLUMN.to_string());
    ingest::write_csv_rows(
        &csv_path,
        &header,
        (0..t.n_rows()).map(|i| {
            let mut row: Vec<String> = t.x.row(i).iter().map(|v| format!("{v}")).collect();
            row.push(t.y[i].to_string());
            row
        }),
    )?;
    let columns = t
        .feature_names
        .iter()
        .zip(&t.categorical)
        .map(|(n, &c)| ColumnSpec {
            name: n.clone(),
            kind: if c {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            },
            missing_count: 0,
        })
        .collect();
    crate::json::write_json(
        &json_path,
        &TableSidecar {
            format_version: ingest::TABLE_FORMAT_VERSION,
            row_count: t.n_rows(),
            columns,
            label_column: ingest::LABEL_COLUMN.to_string(),
            label_map: t.class_names.clone(),
        },
    )
}

pub fn read_feature_table(stem: &Path) -> Result<FeatureTable> {
    let (csv_path, json_path) = ingest::canonical_paths(stem);
    let sidecar = ingest::read_sidecar(&json_path)?;
    let (header, records) = ingest::read_csv_records(&csv_path)?;
    let d = sidecar.columns.len();
    let expected = sidecar
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .chain(std::iter::once(ingest::LABEL_COLUMN));
    if header.iter().map(String::as_str).ne(expected) {
        return Err(Error::SchemaMismatch(format!(
            "{}: header does not match sidecar",
            csv_path.display()
        )));
    }
    let bad = |i: usize, f: &str| {
        Error::SchemaMismatch(format!(
            "{}: row {i} has non-numeric field `{f}`",
            csv_path.display()
        ))
    };
    let mut data = Vec::with_capacity(records.len() * d);
    let mut y = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        for f in rec.iter().take(d) {
            match Cell::parse(f) {
                Cell::Number(v) => data.push(v),
                _ => return Err(bad(i, f)),
            }
        }
        let lf = rec.get(d).unwrap_or("");
        y.push(lf.trim().parse::<usize>().map_err(|_| bad(i, lf))?);
    }
    if y.len() != sidecar.row_count {
        return Err(Error::SchemaMismatch(format!(
            "sidecar declares {} rows, CSV holds {}",
            sidecar.row_count,
            y.len()
        )));
    }
    FeatureTable::new(
        sidecar.columns.iter().map(|c| c.name.clone()).collect(),
        sidecar
            .columns
            .iter()
            .map(|c| c.kind == ColumnKind::Categorical)
            .collect(),
        Matrix::from_vec(y.len(), d, data),
        y,
        sidecar.label_map,
    )
}
