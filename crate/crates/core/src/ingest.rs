//! Dataset ingestion.
//!
//! A dataset root holds one subdirectory per traffic class; every CSV file in
//! a subdirectory contributes rows labelled with the directory name. Files
//! are merged into one [`RawTable`] ordered by (file path, row index), with
//! columns unioned across files and padded with missing cells.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::rng;

/// Name of the label column appended by [`scan_dataset`] and written to
/// canonical table files.
pub const LABEL_COLUMN: &str = "Label";

/// The ten ISOT drone traffic classes in their published index order.
pub const ISOT_CLASS_NAMES: [&str; 10] = [
    "Benign",
    "DoS Attacks",
    "Injection",
    "IP Spoofing",
    "MITM",
    "Password Cracking",
    "Payload Manipulation",
    "Replay Attack",
    "Unauthorized UDP Packets",
    "Video Interception Attack",
];

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Number(f64),
    Text(String),
}

impl Cell {
    /// Parse a CSV field. Empty fields and any casing of `nan` are missing;
    /// fields that parse as finite numbers are numbers; everything else is text.
    pub fn parse(field: &str) -> Cell {
        let s = field.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("nan") {
            return Cell::Missing;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Text(s.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// String form used for categorical encoding; `None` when missing.
    pub fn as_category(&self) -> Option<String> {
        match self {
            Cell::Missing => None,
            Cell::Number(v) => Some(format!("{v}")),
            Cell::Text(s) => Some(s.clone()),
        }
    }

    fn to_field(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Number(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Cell>,
}

/// Heterogeneous table straight out of the CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    source_files: Vec<PathBuf>,
    row_count: usize,
}

impl RawTable {
    /// Checks that column names are unique and all columns have equal length.
    pub fn new(columns: Vec<Column>, source_files: Vec<PathBuf>) -> Result<Self> {
        let row_count = columns.first().map_or(0, |c| c.values.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::SchemaConflict {
                    column: c.name.clone(),
                    detail: "duplicate column name".into(),
                });
            }
            if c.values.len() != row_count {
                return Err(Error::SchemaConflict {
                    column: c.name.clone(),
                    detail: format!("has {} values, expected {row_count}", c.values.len()),
                });
            }
        }
        Ok(RawTable {
            columns,
            source_files,
            row_count,
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn source_files(&self) -> &[PathBuf] {
        &self.source_files
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> RawTable {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: idx.iter().map(|&i| c.values[i].clone()).collect(),
            })
            .collect();
        RawTable {
            columns,
            source_files: self.source_files.clone(),
            row_count: idx.len(),
        }
    }

    /// Keep only columns whose name satisfies `keep`, preserving order.
    pub fn retain_columns(&self, mut keep: impl FnMut(&str) -> bool) -> RawTable {
        RawTable {
            columns: self
                .columns
                .iter()
                .filter(|c| keep(&c.name))
                .cloned()
                .collect(),
            source_files: self.source_files.clone(),
            row_count: self.row_count,
        }
    }

    /// Drop columns with no non-missing cell; returns the dropped names.
    pub fn drop_all_missing(&mut self) -> Vec<String> {
        let mut dropped = Vec::new();
        self.columns.retain(|c| {
            let keep = c.values.iter().any(|v| !v.is_missing());
            if !keep {
                dropped.push(c.name.clone());
            }
            keep
        });
        dropped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub missing_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub class_name: String,
    pub class_index: usize,
}

/// Class name ↔ dense index mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LabelEntry>", into = "Vec<LabelEntry>")]
pub struct LabelMap {
    entries: Vec<LabelEntry>,
}

impl TryFrom<Vec<LabelEntry>> for LabelMap {
    type Error = Error;

    fn try_from(mut entries: Vec<LabelEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.class_index);
        let mut names = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.class_index != i {
                return Err(Error::SchemaMismatch(format!(
                    "label indices must be exactly 0..{}, found {}",
                    entries.len(),
                    e.class_index
                )));
            }
            if !names.insert(e.class_name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate class name `{}` in label map",
                    e.class_name
                )));
            }
        }
        Ok(LabelMap { entries })
    }
}

impl From<LabelMap> for Vec<LabelEntry> {
    fn from(m: LabelMap) -> Self {
        m.entries
    }
}

impl LabelMap {
    /// Default mapping: lexicographic (byte-wise) order of the distinct names.
    pub fn lexicographic<S: AsRef<str>>(names: &[S]) -> LabelMap {
        let mut uniq: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
        uniq.sort_unstable();
        uniq.dedup();
        Self::build(uniq)
    }

    /// Mapping in the given order. Fails on duplicates.
    pub fn ordered<S: AsRef<str>>(names: &[S]) -> Result<LabelMap> {
        let entries: Vec<LabelEntry> = names
            .iter()
            .enumerate()
            .map(|(i, n)| LabelEntry {
                class_name: n.as_ref().to_string(),
                class_index: i,
            })
            .collect();
        LabelMap::try_from(entries)
    }

    fn build(names: Vec<&str>) -> LabelMap {
        LabelMap {
            entries: names
                .into_iter()
                .enumerate()
                .map(|(i, n)| LabelEntry {
                    class_name: n.to_string(),
                    class_index: i,
                })
                .collect(),
        }
    }

    /// Read an override file: a JSON array of names in index order, an
    /// object `{ "name": index, ... }`, or the serialized entry list.
    pub fn load(path: &Path) -> Result<LabelMap> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;
        match value {
            serde_json::Value::Array(items) if items.iter().all(serde_json::Value::is_object) => {
                serde_json::from_value(serde_json::Value::Array(items))
                    .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))
            }
            serde_json::Value::Array(items) => {
                let names: Vec<String> = items
                    .into_iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => Ok(s),
                        other => Err(Error::SchemaMismatch(format!(
                            "{}: expected class name, got {other}",
                            path.display()
                        ))),
                    })
                    .collect::<Result<_>>()?;
                LabelMap::ordered(&names)
            }
            serde_json::Value::Object(map) => {
                let entries = map
                    .into_iter()
                    .map(|(k, v)| {
                        let idx = v.as_u64().ok_or_else(|| {
                            Error::SchemaMismatch(format!(
                                "{}: index for `{k}` is not a non-negative integer",
                                path.display()
                            ))
                        })?;
                        Ok(LabelEntry {
                            class_name: k,
                            class_index: idx as usize,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                LabelMap::try_from(entries)
            }
            _ => Err(Error::SchemaMismatch(format!(
                "{}: label map must be an array or object",
                path.display()
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.class_name == name)
            .map(|e| e.class_index)
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        self.entries.get(index).map(|e| e.class_name.as_str())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.class_name.as_str()).collect()
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }
}

struct ParsedFile {
    class: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

struct CsvContent {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

pub(crate) fn read_csv_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes.as_slice());
    let csv_err = |e: csv::Error| Error::CsvFailure {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    Ok((header, records))
}

fn read_csv(path: &Path) -> Result<CsvContent> {
    let (header, records) = read_csv_records(path)?;
    let rows = records
        .iter()
        .map(|r| r.iter().map(Cell::parse).collect())
        .collect();
    Ok(CsvContent { header, rows })
}

fn parse_csv_file(path: &Path, class: String) -> Result<ParsedFile> {
    let CsvContent { header, rows } = read_csv(path)?;
    let mut seen = HashSet::new();
    for h in &header {
        if h == LABEL_COLUMN {
            return Err(Error::SchemaConflict {
                column: h.clone(),
                detail: format!("{} reserves this name for the label", path.display()),
            });
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::SchemaConflict {
                column: h.clone(),
                detail: format!("duplicate header in {}", path.display()),
            });
        }
    }
    Ok(ParsedFile {
        class,
        header,
        rows,
    })
}

fn is_csv(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case("csv"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FileColumnType {
    Empty,
    Numeric,
    Text,
    Mixed,
}

/// Scan a dataset root with the default lexicographic label mapping.
pub fn scan_dataset(root: &Path) -> Result<(RawTable, LabelMap)> {
    scan_dataset_with(root, None)
}

/// Scan a dataset root; `label_map` overrides the default mapping and must
/// name exactly the classes found on disk.
pub fn scan_dataset_with(root: &Path, label_map: Option<&LabelMap>) -> Result<(RawTable, LabelMap)> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let class = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for f in sorted_entries(&dir)? {
            if is_csv(&f) {
                files.push((f, class.clone()));
            }
        }
    }

    let parsed: Vec<ParsedFile> = files
        .par_iter()
        .map(|(path, class)| parse_csv_file(path, class.clone()))
        .collect::<Result<_>>()?;

    let mut row_classes: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &parsed {
        *row_classes.entry(p.class.as_str()).or_default() += p.rows.len();
    }
    let present: Vec<&str> = row_classes
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(c, _)| *c)
        .collect();
    if present.is_empty() {
        return Err(Error::NoClassesFound {
            root: root.to_path_buf(),
        });
    }

    // Union of headers in first-appearance order, plus a per-file type check.
    let mut names: Vec<String> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    let mut seen_types: Vec<(FileColumnType, usize)> = Vec::new();
    for (fi, p) in parsed.iter().enumerate() {
        for (ci, h) in p.header.iter().enumerate() {
            let col = *position.entry(h.clone()).or_insert_with(|| {
                names.push(h.clone());
                seen_types.push((FileColumnType::Empty, usize::MAX));
                names.len() - 1
            });
            let mut t = FileColumnType::Empty;
            for row in &p.rows {
                let cell_t = match &row[ci] {
                    Cell::Missing => continue,
                    Cell::Number(_) => FileColumnType::Numeric,
                    Cell::Text(_) => FileColumnType::Text,
                };
                t = match t {
                    FileColumnType::Empty => cell_t,
                    same if same == cell_t => same,
                    _ => FileColumnType::Mixed,
                };
            }
            let (prev, prev_file) = seen_types[col];
            let conflict = matches!(
                (prev, t),
                (FileColumnType::Numeric, FileColumnType::Text)
                    | (FileColumnType::Text, FileColumnType::Numeric)
            );
            if conflict {
                return Err(Error::SchemaConflict {
                    column: h.clone(),
                    detail: format!(
                        "numeric in one file and text in another ({} vs {})",
                        files[prev_file].0.display(),
                        files[fi].0.display()
                    ),
                });
            }
            if prev == FileColumnType::Empty || t == FileColumnType::Mixed {
                seen_types[col] = (t, fi);
            }
        }
    }

    let total_rows: usize = parsed.iter().map(|p| p.rows.len()).sum();
    let mut columns: Vec<Column> = names
        .iter()
        .map(|n| Column {
            name: n.clone(),
            values: Vec::with_capacity(total_rows),
        })
        .collect();
    let mut labels = Vec::with_capacity(total_rows);
    for p in &parsed {
        let map: Vec<usize> = p.header.iter().map(|h| position[h]).collect();
        for row in &p.rows {
            let mut filled = vec![false; columns.len()];
            for (ci, cell) in row.iter().enumerate() {
                columns[map[ci]].values.push(cell.clone());
                filled[map[ci]] = true;
            }
            for (c, f) in filled.iter().enumerate() {
                if !f {
                    columns[c].values.push(Cell::Missing);
                }
            }
            labels.push(Cell::Text(p.class.clone()));
        }
    }
    columns.push(Column {
        name: LABEL_COLUMN.to_string(),
        values: labels,
    });

    let label_map = match label_map {
        None => LabelMap::lexicographic(&present),
        Some(m) => {
            for c in &present {
                if m.index_of(c).is_none() {
                    return Err(Error::UnknownClass((*c).to_string()));
                }
            }
            if m.len() != present.len() {
                return Err(Error::SchemaMismatch(format!(
                    "label map lists {} classes but {} have data",
                    m.len(),
                    present.len()
                )));
            }
            m.clone()
        }
    };

    let table = RawTable::new(columns, files.into_iter().map(|(p, _)| p).collect())?;
    Ok((table, label_map))
}

/// Classify every column as numeric or categorical.
///
/// A column is numeric iff every non-missing cell is a finite number.
/// Fails with [`Error::AllMissingColumn`] on the first column without any
/// value; use [`RawTable::drop_all_missing`] first to skip such columns.
pub fn infer_schema(t: &RawTable) -> Result<Vec<ColumnSpec>> {
    t.columns()
        .iter()
        .map(|c| {
            let missing_count = c.values.iter().filter(|v| v.is_missing()).count();
            if missing_count == c.values.len() {
                return Err(Error::AllMissingColumn {
                    column: c.name.clone(),
                });
            }
            let numeric = c
                .values
                .iter()
                .all(|v| matches!(v, Cell::Missing | Cell::Number(_)));
            Ok(ColumnSpec {
                name: c.name.clone(),
                kind: if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                },
                missing_count,
            })
        })
        .collect()
}

/// Parameters of the synthetic stand-in dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_rows: usize,
    /// Class-informative numeric features.
    pub n_numeric: usize,
    /// Numeric features drawn independently of the class.
    pub n_noise: usize,
    pub n_categorical: usize,
    pub n_classes: usize,
    /// Class proportions; empty means uniform.
    pub class_weights: Vec<f64>,
    /// 0 gives identical class-conditional distributions, 1 well separated clusters.
    pub separability: f64,
    pub missing_fraction: f64,
    /// Defaults to the ISOT class names (K ≤ 10) or `class_NN`.
    pub class_names: Option<Vec<String>>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_rows: 1000,
            n_numeric: 8,
            n_noise: 0,
            n_categorical: 2,
            n_classes: 2,
            class_weights: Vec::new(),
            separability: 1.0,
            missing_fraction: 0.0,
            class_names: None,
        }
    }
}

/// Cluster spacing in units of the within-class standard deviation at
/// separability 1.
const CLUSTER_SPACING: f64 = 8.0;

impl SynthSpec {
    fn weights(&self) -> Vec<f64> {
        if self.class_weights.is_empty() {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        } else {
            self.class_weights.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidSpec("n_classes must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.separability) {
            return Err(Error::InvalidSpec("separability must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::InvalidSpec("missing_fraction must lie in [0, 1)".into()));
        }
        let w = self.weights();
        if w.len() != self.n_classes {
            return Err(Error::InvalidSpec(format!(
                "{} class weights for {} classes",
                w.len(),
                self.n_classes
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidSpec("class weights must be non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("class weights sum to {sum}, not 1")));
        }
        if self.n_rows < self.n_classes {
            return Err(Error::InvalidSpec("fewer rows than classes".into()));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.n_classes {
                return Err(Error::InvalidSpec("class_names length differs from n_classes".into()));
            }
        }
        Ok(())
    }

    fn class_names(&self) -> Vec<String> {
        match &self.class_names {
            Some(n) => n.clone(),
            None if self.n_classes <= ISOT_CLASS_NAMES.len() => ISOT_CLASS_NAMES[..self.n_classes]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            None => (0..self.n_classes).map(|k| format!("class_{k:02}")).collect(),
        }
    }
}

/// Largest-remainder apportionment of `n` rows to classes.
fn class_counts(n: usize, weights: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[k] += 1;
        rest -= 1;
    }
    counts
}

/// Generate a labelled table of Gaussian class clusters.
///
/// Each informative numeric feature places the class means on a seeded
/// permutation of an evenly spaced grid whose spacing scales with
/// `separability`; the feature is then given a random affine scale so
/// columns look heterogeneous. Categorical columns take a class-specific
/// value with probability `0.9 · separability`, otherwise a uniform draw.
/// The output is a pure function of `(spec, seed)`.
pub fn synthesize_dataset(spec: &SynthSpec, seed: u64) -> Result<(RawTable, LabelMap)> {
    spec.validate()?;
    let k = spec.n_classes;
    let names = spec.class_names();
    let label_map = LabelMap::ordered(&names)?;

    let mut structure = rng::stream(seed, 0);
    let centers: Vec<Vec<f64>> = (0..spec.n_numeric)
        .map(|_| {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut structure);
            perm.iter()
                .map(|&p| spec.separability * CLUSTER_SPACING * (p as f64 - (k as f64 - 1.0) / 2.0))
                .collect()
        })
        .collect();
    let n_affine = spec.n_numeric + spec.n_noise;
    let affine: Vec<(f64, f64)> = (0..n_affine)
        .map(|_| {
            let scale = 10f64.powf(structure.random_range(-1.0..2.0));
            let offset = structure.random_range(-100.0..100.0);
            (scale, offset)
        })
        .collect();
    let domain = k.max(3);

    let mut labels: Vec<usize> = class_counts(spec.n_rows, &spec.weights())
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng::stream(seed, 1));

    let mut values = rng::stream(seed, 2);
    let n_cols = n_affine + spec.n_categorical;
    let mut cols: Vec<Vec<Cell>> = vec![Vec::with_capacity(spec.n_rows); n_cols];
    for &y in &labels {
        for j in 0..n_affine {
            let z: f64 = values.sample(StandardNormal);
            let centered = if j < spec.n_numeric { centers[j][y] + z } else { z };
            let (scale, offset) = affine[j];
            cols[j].push(Cell::Number(offset + scale * centered));
        }
        for j in 0..spec.n_categorical {
            let informative = values.random::<f64>() < 0.9 * spec.separability;
            let v = if informative {
                (y + j) % domain
            } else {
                values.random_range(0..domain)
            };
            cols[n_affine + j].push(Cell::Text(format!("v{v}")));
        }
    }
    if spec.missing_fraction > 0.0 {
        let mut holes = rng::stream(seed, 3);
        for col in &mut cols {
            for cell in col.iter_mut() {
                if holes.random::<f64>() < spec.missing_fraction {
                    *cell = Cell::Missing;
                }
            }
        }
    }

    let mut columns: Vec<Column> = cols
        .into_iter()
        .enumerate()
        .map(|(j, values)| {
            let name = if j < spec.n_numeric {
                format!("f{j:02}")
            } else if j < n_affine {
                format!("noise{:02}", j - spec.n_numeric)
            } else {
                format!("cat{:02}", j - n_affine)
            };
            Column { name, values }
        })
        .collect();
    columns.push(Column {
        name: LABEL_COLUMN.to_string(),
        values: labels.iter().map(|&y| Cell::Text(names[y].clone())).collect(),
    });
    Ok((RawTable::new(columns, Vec::new())?, label_map))
}

/// JSON sidecar written next to a canonical table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSidecar {
    pub format_version: u32,
    pub row_count: usize,
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
    pub label_map: LabelMap,
}

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// Paths of the canonical `<stem>.csv` and `<stem>.json` pair.
pub fn canonical_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("csv"), stem.with_extension("json"))
}

pub(crate) fn write_csv_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let err = |e: csv::Error| Error::CsvFailure {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::CsvFailure {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    json::write_atomic(path, &bytes)
}

/// Write a raw table in the canonical format: feature columns followed by an
/// integer `Label` column, plus the JSON sidecar.
pub fn write_canonical(
    stem: &Path,
    table: &RawTable,
    schema: &[ColumnSpec],
    label_column: &str,
    label_map: &LabelMap,
) -> Result<()> {
    let label = table
        .column(label_column)
        .ok_or_else(|| Error::SchemaMismatch(format!("no label column `{label_column}`")))?;
    let codes: Vec<usize> = label
        .values
        .iter()
        .map(|c| {
            let name = c.as_category().unwrap_or_default();
            label_map.index_of(&name).ok_or(Error::UnknownClass(name))
        })
        .collect::<Result<_>>()?;
    let features: Vec<&Column> = table
        .columns()
        .iter()
        .filter(|c| c.name != label_column)
        .collect();
    let mut header: Vec<String> = features.iter().map(|c| c.name.clone()).collect();
    header.push(LABEL_COLUMN.to_string());
    let (csv_path, json_path) = canonical_paths(stem);
    write_csv_rows(
        &csv_path,
        &header,
        (0..table.row_count()).map(|r| {
            let mut row: Vec<String> = features.iter().map(|c| c.values[r].to_field()).collect();
            row.push(codes[r].to_string());
            row
        }),
    )?;
    let columns = features
        .iter()
        .map(|c| {
            schema
                .iter()
                .find(|s| s.name == c.name)
                .cloned()
                .ok_or_else(|| Error::SchemaMismatch(format!("no column spec for `{}`", c.name)))
        })
        .collect::<Result<_>>()?;
    json::write_json(
        &json_path,
        &TableSidecar {
            format_version: TABLE_FORMAT_VERSION,
            row_count: table.row_count(),
            columns,
            label_column: LABEL_COLUMN.to_string(),
            label_map: label_map.clone(),
        },
    )
}

pub fn read_sidecar(path: &Path) -> Result<TableSidecar> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let sidecar: TableSidecar = serde_json::from_slice(&text)
        .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;
    if sidecar.format_version > TABLE_FORMAT_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "{}: table format version {} is newer than {}",
            path.display(),
            sidecar.format_version,
            TABLE_FORMAT_VERSION
        )));
    }
    Ok(sidecar)
}

/// Read a canonical table back. The label column holds class names again.
pub fn read_canonical(stem: &Path) -> Result<(RawTable, TableSidecar)> {
    let (csv_path, json_path) = canonical_paths(stem);
    let sidecar = read_sidecar(&json_path)?;
    let parsed = read_csv(&csv_path)?;
    let expected: Vec<&str> = sidecar
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .chain(std::iter::once(LABEL_COLUMN))
        .collect();
    if parsed.header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(Error::SchemaMismatch(format!(
            "{}: header does not match sidecar",
            csv_path.display()
        )));
    }
    let n_feat = sidecar.columns.len();
    let mut columns: Vec<Column> = sidecar
        .columns
        .iter()
        .map(|c| Column {
            name: c.name.clone(),
            values: Vec::with_capacity(parsed.rows.len()),
        })
        .collect();
    let mut labels = Vec::with_capacity(parsed.rows.len());
    for row in parsed.rows {
        let mut it = row.into_iter();
        for col in columns.iter_mut().take(n_feat) {
            col.values.push(it.next().unwrap_or(Cell::Missing));
        }
        let code = match it.next() {
            Some(Cell::Number(v)) if v >= 0.0 && v.fract() == 0.0 => v as usize,
            other => {
                return Err(Error::SchemaMismatch(format!(
                    "{}: bad label cell {other:?}",
                    csv_path.display()
                )))
            }
        };
        let name = sidecar
            .label_map
            .name_of(code)
            .ok_or(Error::InvalidLabel {
                label: code,
                n_classes: sidecar.label_map.len(),
            })?;
        labels.push(Cell::Text(name.to_string()));
    }
    columns.push(Column {
        name: LABEL_COLUMN.to_string(),
        values: labels,
    });
    let table = RawTable::new(columns, vec![csv_path])?;
    if table.row_count() != sidecar.row_count {
        return Err(Error::SchemaMismatch(format!(
            "sidecar declares {} rows, CSV holds {}",
            sidecar.row_count,
            table.row_count()
        )));
    }
    Ok((table, sidecar))
}
