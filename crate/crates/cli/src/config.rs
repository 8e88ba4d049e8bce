//! Run configuration file.
//!
//! Every field except `seed` has a default. Command-line flags override the
//! file. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uavids_core::ensembles::{AdaBoostVariant, ModelKind, ModelSpec};
use uavids_core::explain::{AblationConfig, LimeOptions, DEFAULT_REPEATS};
use uavids_core::ingest::SynthSpec;
use uavids_core::metrics::LabelMetric;
use uavids_core::statcompare::{DEFAULT_BOOTSTRAP_ITERATIONS, DEFAULT_FOLDS};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub k_folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            k_folds: DEFAULT_FOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub figures: bool,
    pub shap: bool,
    pub permutation: bool,
    pub lime: bool,
    /// Features kept in importance tables and figures.
    pub top_n: usize,
    /// Test rows explained by SHAP; `None` explains all of them.
    pub shap_rows: Option<usize>,
    pub permutation_repeats: usize,
    /// Test row explained by LIME.
    pub lime_row: usize,
    pub lime_options: LimeOptions,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            figures: true,
            shap: true,
            permutation: true,
            lime: true,
            top_n: 10,
            shap_rows: Some(500),
            permutation_repeats: DEFAULT_REPEATS,
            lime_row: 0,
            lime_options: LimeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Short name of the model every other model is tested against.
    pub reference: Option<String>,
    pub metric: LabelMetric,
    pub bootstrap_iterations: usize,
    pub confidence: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            reference: None,
            metric: LabelMetric::F1Macro,
            bootstrap_iterations: DEFAULT_BOOTSTRAP_ITERATIONS,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Per-class CSV folder tree or canonical table stem.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub reports: ReportConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default)]
    pub fit_on_all: bool,
    #[serde(default)]
    pub adaboost_variant: Option<AdaBoostVariant>,
    #[serde(default)]
    pub label_map: Option<PathBuf>,
}

fn default_models() -> Vec<ModelSpec> {
    ModelKind::ALL.iter().map(|&k| ModelSpec::new(k)).collect()
}

fn default_out() -> PathBuf {
    PathBuf::from("run")
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed,
            dataset: None,
            synth: None,
            models: default_models(),
            split: SplitConfig::default(),
            out: default_out(),
            reports: ReportConfig::default(),
            compare: CompareConfig::default(),
            ablation: AblationConfig::default(),
            fit_on_all: false,
            adaboost_variant: None,
            label_map: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::file(path, e.to_string()))
    }

    /// Models after the compatibility flags are applied.
    pub fn resolved_models(&self) -> Result<Vec<(String, ModelSpec)>, CliError> {
        let mut out: Vec<(String, ModelSpec)> = Vec::new();
        for spec in &self.models {
            let mut spec = spec.clone();
            if let (ModelKind::Adaboost, Some(v)) = (spec.kind, self.adaboost_variant) {
                spec.adaboost_variant = v;
            }
            let name = spec.kind.short_name().to_string();
            if out.iter().any(|(n, _)| *n == name) {
                return Err(CliError::flag("models", format!("model `{name}` is listed twice")));
            }
            out.push((name, spec));
        }
        if out.is_empty() {
            return Err(CliError::flag("models", "no models selected"));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::flag("--train-fraction", format!("{f} is outside (0, 1)")));
        }
        if self.split.k_folds < 2 {
            return Err(CliError::flag("--folds", "at least 2 folds are needed"));
        }
        self.resolved_models().map(|_| ())
    }
}
