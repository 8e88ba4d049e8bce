use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. Variants name the offending
/// file, column, class or value so callers can surface them verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no class directories with CSV files under {root}")]
    NoClassesFound { root: PathBuf },

    #[error("schema conflict in column `{column}`: {detail}")]
    SchemaConflict { column: String, detail: String },

    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV parse failure in {path}: {detail}")]
    CsvFailure { path: PathBuf, detail: String },

    #[error("column `{column}` has no non-missing values")]
    AllMissingColumn { column: String },

    #[error("invalid synthetic dataset spec: {0}")]
    InvalidSpec(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("cannot stratify: class `{class}` has {count} sample(s)")]
    StratificationImpossible { class: String, count: usize },

    #[error("class {class} does not occur in the labels")]
    MissingClass { class: usize },

    #[error("unknown class name `{0}`")]
    UnknownClass(String),

    #[error("impurity of an empty node is undefined")]
    EmptyNode,

    #[error("weak-learner error rate {0} is outside (0, 1)")]
    InvalidErrorRate(f64),

    #[error("unsupported model format version {found} (this build reads up to {supported})")]
    UnsupportedModelVersion { found: u32, supported: u32 },

    #[error("cannot decode model: {0}")]
    DecodeError(String),

    #[error("label {label} is outside 0..{n_classes}")]
    InvalidLabel { label: usize, n_classes: usize },

    #[error("probability row {row} is not a distribution (sum {sum})")]
    InvalidProbabilities { row: usize, sum: f64 },

    #[error("model has no usable node cover statistics")]
    ModelLacksCover,

    #[error("brute-force Shapley enumeration supports at most 12 features, got {0}")]
    TooManyFeatures(usize),

    #[error("local surrogate fit failed: {0}")]
    SurrogateFailed(String),

    #[error("ablation configuration `{0}` leaves no features")]
    NothingLeft(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NoClassesFound { .. } => "NoClassesFound",
            Error::SchemaConflict { .. } => "SchemaConflict",
            Error::IoFailure { .. } => "IoFailure",
            Error::CsvFailure { .. } => "CsvFailure",
            Error::AllMissingColumn { .. } => "AllMissingColumn",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::StratificationImpossible { .. } => "StratificationImpossible",
            Error::MissingClass { .. } => "MissingClass",
            Error::UnknownClass(_) => "UnknownClass",
            Error::EmptyNode => "EmptyNode",
            Error::InvalidErrorRate(_) => "InvalidErrorRate",
            Error::UnsupportedModelVersion { .. } => "UnsupportedModelVersion",
            Error::DecodeError(_) => "DecodeError",
            Error::InvalidLabel { .. } => "InvalidLabel",
            Error::InvalidProbabilities { .. } => "InvalidProbabilities",
            Error::ModelLacksCover => "ModelLacksCover",
            Error::TooManyFeatures(_) => "TooManyFeatures",
            Error::SurrogateFailed(_) => "SurrogateFailed",
            Error::NothingLeft(_) => "NothingLeft",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
