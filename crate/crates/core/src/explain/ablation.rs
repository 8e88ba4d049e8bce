use serde::{Deserialize, Serialize};

use super::{attributions, explained_rows, permutation_importance};
use crate::ensembles::{fit_model, gini_importance, ModelSpec};
use crate::error::{Error, Result};
use crate::metrics::LabelMetric;
use crate::pipeline::{cross_validate, seed_tags, split_and_prepare, RawDataset};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingSource {
    #[default]
    Gini,
    Permutation,
    Shap,
}

impl std::str::FromStr for RankingSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown importance source `{s}`")))
    }
}

/// Features whose name contains any of `patterns` (case-insensitive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionGroup {
    pub name: String,
    pub patterns: Vec<String>,
}

impl ExclusionGroup {
    pub fn matches(&self, feature: &str) -> bool {
        let f = feature.to_lowercase();
        self.patterns.iter().any(|p| f.contains(&p.to_lowercase()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub source: RankingSource,
    pub subset_sizes: Vec<usize>,
    pub exclusion_groups: Vec<ExclusionGroup>,
    pub k_folds: usize,
    pub metric: LabelMetric,
    /// Holdout fraction used to fit the ranking model.
    pub train_fraction: f64,
    pub permutation_repeats: usize,
    /// Rows explained when ranking by SHAP.
    pub shap_rows: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            source: RankingSource::Gini,
            subset_sizes: vec![5, 10, 15],
            exclusion_groups: Vec::new(),
            k_folds: 5,
            metric: LabelMetric::F1Macro,
            train_fraction: 0.8,
            permutation_repeats: 10,
            shap_rows: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub configuration: String,
    pub features: Vec<String>,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// `mean − baseline mean`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub source: RankingSource,
    pub metric: LabelMetric,
    /// Features with their ranking score, most important first.
    pub ranking: Vec<(String, f64)>,
    /// First row is the all-features baseline.
    pub rows: Vec<AblationRow>,
}

fn rank_features(spec: &ModelSpec, ds: &RawDataset, cfg: &AblationConfig, seed: u64) -> Result<Vec<(String, f64)>> {
    let p = split_and_prepare(ds, cfg.train_fraction, seed, false)?;
    let model = fit_model(spec, &p.train, derive_seed(seed, seed_tags::MODEL))?;
    let mut ranking: Vec<(usize, f64)> = match cfg.source {
        RankingSource::Gini => gini_importance(&model).into_iter().map(|f| (f.feature, f.importance)).collect(),
        RankingSource::Permutation => permutation_importance(
            &model,
            &p.test,
            cfg.metric,
            cfg.permutation_repeats,
            derive_seed(seed, seed_tags::PERMUTATION),
        )?
        .rows
        .into_iter()
        .map(|r| (r.feature, r.mean))
        .collect(),
        RankingSource::Shap => {
            let rows = explained_rows(p.test.n_rows(), Some(cfg.shap_rows), seed);
            let attrs = attributions(&model, &p.test, &rows)?;
            let d = p.test.n_features();
            let mut acc = vec![0.0; d];
            for a in &attrs {
                for c in &a.classes {
                    for (s, v) in acc.iter_mut().zip(&c.phi) {
                        *s += v.abs();
                    }
                }
            }
            let n = attrs.len().max(1) as f64;
            acc.into_iter().enumerate().map(|(j, s)| (j, s / n)).collect()
        }
    };
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranking
        .into_iter()
        .map(|(j, s)| (p.train.feature_names[j].clone(), s))
        .collect())
}

/// Retrain `spec` by cross-validation on feature subsets: the top-N
/// features of an importance ranking and the complement of each exclusion
/// group. All configurations share folds and seeds with the baseline.
pub fn ablation_study(spec: &ModelSpec, ds: &RawDataset, cfg: &AblationConfig, seed: u64) -> Result<AblationReport> {
    let ranking = rank_features(spec, ds, cfg, seed)?;
    let all: Vec<String> = ds.feature_names().into_iter().map(String::from).collect();
    let mut configs: Vec<(String, Vec<String>)> = vec![("all features".into(), all.clone())];
    for &n in &cfg.subset_sizes {
        if n == 0 {
            return Err(Error::NothingLeft(format!("top-{n}")));
        }
        let keep: Vec<String> = ranking.iter().take(n).map(|(f, _)| f.clone()).collect();
        configs.push((format!("top-{n}"), keep));
    }
    for g in &cfg.exclusion_groups {
        let keep: Vec<String> = all.iter().filter(|f| !g.matches(f)).cloned().collect();
        if keep.is_empty() {
            return Err(Error::NothingLeft(format!("without {}", g.name)));
        }
        configs.push((format!("without {}", g.name), keep));
    }

    let specs = vec![("model".to_string(), spec.clone())];
    let mut rows: Vec<AblationRow> = Vec::with_capacity(configs.len());
    for (name, keep) in configs {
        let sub = ds.select_features(|f| keep.iter().any(|k| k == f));
        let fs = cross_validate(&specs, &sub, cfg.k_folds, cfg.metric, seed)?;
        let mean = fs.means()[0];
        let delta = rows.first().map_or(0.0, |b| mean - b.mean);
        rows.push(AblationRow {
            configuration: name,
            features: sub.feature_names().into_iter().map(String::from).collect(),
            fold_scores: fs.scores[0].clone(),
            mean,
            delta,
        });
    }
    Ok(AblationReport {
        source: cfg.source,
        metric: cfg.metric,
        ranking,
        rows,
    })
}
