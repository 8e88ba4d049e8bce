use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "uavids", version, about = "Tree-ensemble intrusion detection for UAV network traffic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each overrides the matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Model to use; repeat for several.
    #[arg(long = "model", value_name = "NAME", value_parser = ["rf", "et", "ada", "gbr", "gbo"])]
    pub models: Vec<String>,
    /// Trees (or boosting rounds) for every selected model.
    #[arg(long, value_name = "N")]
    pub estimators: Option<usize>,
    #[arg(long, value_name = "N")]
    pub folds: Option<usize>,
    #[arg(long, value_name = "F")]
    pub train_fraction: Option<f64>,
    /// Fit imputation and scaling on all rows before splitting.
    #[arg(long)]
    pub fit_on_all: bool,
    #[arg(long, value_name = "VARIANT", value_parser = ["paper", "samme"])]
    pub adaboost_variant: Option<String>,
    /// Class-name to index mapping (JSON).
    #[arg(long, value_name = "PATH")]
    pub label_map: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read per-class CSV folders into the canonical table.
    Ingest {
        /// Dataset root with one folder per class.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate the synthetic stand-in dataset.
    Synth {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        classes: Option<usize>,
        /// Class-informative numeric features.
        #[arg(long)]
        numeric: Option<usize>,
        /// Class-independent numeric features.
        #[arg(long)]
        noise: Option<usize>,
        #[arg(long)]
        categorical: Option<usize>,
        #[arg(long)]
        separability: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Stratified split, then fit and apply the preprocessing recipe.
    Preprocess {
        /// Canonical table stem or dataset root (default `<out>/dataset`).
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the selected models on the training table.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score trained models on the test table.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Stratified k-fold cross-validation of the selected models.
    Crossval {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Statistical comparison of models, or McNemar on a given 2x2 table.
    Compare {
        /// 2x2 agreement table as CSV; skips everything else.
        #[arg(long, value_name = "PATH")]
        contingency: Option<PathBuf>,
        /// Model every other model is tested against.
        #[arg(long, value_name = "NAME", value_parser = ["rf", "et", "ada", "gbr", "gbo"])]
        reference: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// SHAP, permutation importance and LIME for trained models.
    Explain {
        /// Test row explained locally.
        #[arg(long)]
        row: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Retrain on feature subsets.
    Ablate {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG figures from the reports present in the run directory.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Synth { .. } => "synth",
            Command::Preprocess { .. } => "preprocess",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Crossval { .. } => "crossval",
            Command::Compare { .. } => "compare",
            Command::Explain { .. } => "explain",
            Command::Ablate { .. } => "ablate",
            Command::Report { .. } => "report",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Ingest { common, .. }
            | Command::Synth { common, .. }
            | Command::Preprocess { common, .. }
            | Command::Train { common }
            | Command::Evaluate { common }
            | Command::Crossval { common, .. }
            | Command::Compare { common, .. }
            | Command::Explain { common, .. }
            | Command::Ablate { common, .. }
            | Command::Report { common } => common,
        }
    }
}
