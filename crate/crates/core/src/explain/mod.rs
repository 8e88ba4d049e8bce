//! Post-hoc explanations: TreeSHAP, permutation importance, LIME and
//! feature ablation.

mod ablation;
mod lime;
mod permutation;
mod shap;

pub use ablation::{ablation_study, AblationConfig, AblationReport, AblationRow, ExclusionGroup, RankingSource};
pub use lime::{lime_explain, LimeClass, LimeExplanation, LimeOptions};
pub use permutation::{permutation_importance, PermutationImportance, PermutationRow, DEFAULT_REPEATS};
pub use shap::{
    attributions, brute_shapley_oracle, conditional_expectation, explained_rows, output_space, shap_summary,
    summarize, tree_shap, tree_shap_single, Attribution, ClassAttribution, FeatureShap, OutputSpace, ShapSummary,
    MAX_ORACLE_FEATURES,
};

use crate::ensembles::EnsembleModel;
use crate::error::Result;
use crate::matrix::Matrix;

/// Anything that maps feature rows to class probabilities.
pub trait ProbabilisticClassifier: Sync {
    fn n_classes(&self) -> usize;
    fn feature_names(&self) -> &[String];
    fn predict_proba_matrix(&self, x: &Matrix) -> Result<Matrix>;
}

impl ProbabilisticClassifier for EnsembleModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_proba_matrix(&self, x: &Matrix) -> Result<Matrix> {
        EnsembleModel::predict_proba_matrix(self, x)
    }
}
