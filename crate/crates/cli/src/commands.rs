//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;
use uavids_core::ensembles::{self, argmax, fit_model, gini_importance, io as model_io, EnsembleModel, ModelKind, ModelSpec};
use uavids_core::explain::{
    ablation_study, attributions, explained_rows, lime_explain, permutation_importance, summarize,
};
use uavids_core::ingest::{read_canonical, scan_dataset_with, synthesize_dataset, write_canonical, LabelMap};
use uavids_core::pipeline::{cross_validate, seed_tags, split_and_prepare, FoldScores, RawDataset};
use uavids_core::preprocess::{read_feature_table, write_feature_table, FeatureTable};
use uavids_core::rng::derive_seed;
use uavids_core::statcompare::{compare_models, mcnemar_from_table, CompareOptions, HoldoutPredictions};
use uavids_core::{json, Error};

use crate::cli::{Cli, Command, Common};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Stage;
use crate::reports::{self, display_name, EvaluationReport, ExplainReport, ImportanceReport, LocalExplanation};
use crate::svg;

/// File layout of a run directory.
pub struct RunDir(pub PathBuf);

impl RunDir {
    pub fn dataset(&self) -> PathBuf {
        self.0.join("dataset")
    }
    pub fn train(&self) -> PathBuf {
        self.0.join("train")
    }
    pub fn test(&self) -> PathBuf {
        self.0.join("test")
    }
    pub fn recipe(&self) -> PathBuf {
        self.0.join("recipe.json")
    }
    pub fn model(&self, name: &str) -> PathBuf {
        self.0.join("models").join(format!("{name}.json"))
    }
    pub fn report(&self, file: &str) -> PathBuf {
        self.0.join("reports").join(file)
    }
    pub fn figure(&self, file: &str) -> PathBuf {
        self.0.join("figures").join(file)
    }
}

fn needs_seed(cmd: &Command) -> bool {
    match cmd {
        Command::Ingest { .. } | Command::Evaluate { .. } | Command::Report { .. } => false,
        Command::Compare { contingency, .. } => contingency.is_none(),
        _ => true,
    }
}

/// Effective configuration: the config file (if any) with flags applied.
pub fn resolve_config(cmd: &Command) -> CliResult<RunConfig> {
    let c: &Common = cmd.common();
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            if c.seed.is_none() && needs_seed(cmd) {
                return Err(CliError::usage(
                    "--seed",
                    format!("`{}` needs a seed: pass --seed or a --config with `seed`", cmd.name()),
                ));
            }
            RunConfig::with_seed(c.seed.unwrap_or(0))
        }
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if !c.models.is_empty() {
        cfg.models = c
            .models
            .iter()
            .map(|m| {
                let kind = ModelKind::from_str(m).map_err(|e| CliError::core_flag("--model", e))?;
                Ok(cfg
                    .models
                    .iter()
                    .find(|s| s.kind == kind)
                    .cloned()
                    .unwrap_or_else(|| ModelSpec::new(kind)))
            })
            .collect::<CliResult<_>>()?;
    }
    if let Some(n) = c.estimators {
        if n == 0 {
            return Err(CliError::flag("--estimators", "at least one estimator is needed"));
        }
        cfg.models.iter_mut().for_each(|m| m.n_estimators = n);
    }
    if let Some(k) = c.folds {
        cfg.split.k_folds = k;
        cfg.ablation.k_folds = k;
    }
    if let Some(f) = c.train_fraction {
        cfg.split.train_fraction = f;
        cfg.ablation.train_fraction = f;
    }
    cfg.fit_on_all |= c.fit_on_all;
    if let Some(v) = &c.adaboost_variant {
        cfg.adaboost_variant =
            Some(ensembles::AdaBoostVariant::from_str(v).map_err(|e| CliError::core_flag("--adaboost-variant", e))?);
    }
    if let Some(p) = &c.label_map {
        cfg.label_map = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn dispatch(args: Cli) -> CliResult<()> {
    let mut cfg = resolve_config(&args.command)?;
    if let Command::Synth {
        rows,
        classes,
        numeric,
        noise,
        categorical,
        separability,
        ..
    } = &args.command
    {
        let mut spec = cfg.synth.clone().unwrap_or_default();
        let set = |dst: &mut usize, v: &Option<usize>| {
            if let Some(v) = v {
                *dst = *v;
            }
        };
        set(&mut spec.n_rows, rows);
        set(&mut spec.n_classes, classes);
        set(&mut spec.n_numeric, numeric);
        set(&mut spec.n_noise, noise);
        set(&mut spec.n_categorical, categorical);
        if let Some(v) = separability {
            spec.separability = *v;
        }
        cfg.synth = Some(spec);
    }
    let run = RunDir(cfg.out.clone());
    let mut stage = Stage::new(args.command.name(), &run.0, &cfg)?;
    if let Some(p) = &args.command.common().config {
        stage.input(p);
    }
    match &args.command {
        Command::Ingest { input, .. } => ingest(&cfg, &run, &mut stage, input.as_deref())?,
        Command::Synth { .. } => synth(&cfg, &run, &mut stage)?,
        Command::Preprocess { input, .. } => preprocess(&cfg, &run, &mut stage, input.as_deref())?,
        Command::Train { .. } => train(&cfg, &run, &mut stage)?,
        Command::Evaluate { .. } => evaluate(&cfg, &run, &mut stage)?,
        Command::Crossval { input, .. } => crossval(&cfg, &run, &mut stage, input.as_deref())?,
        Command::Compare {
            contingency: Some(path),
            ..
        } => compare_contingency(&run, &mut stage, path)?,
        Command::Compare { reference, .. } => compare(&cfg, &run, &mut stage, reference.as_deref())?,
        Command::Explain { row, .. } => explain(&cfg, &run, &mut stage, *row)?,
        Command::Ablate { input, .. } => ablate(&cfg, &run, &mut stage, input.as_deref())?,
        Command::Report { .. } => report(&cfg, &run, &mut stage)?,
    }
    stage.finish()?;
    Ok(())
}

fn write_bytes(stage: &mut Stage, path: &Path, bytes: &[u8]) -> CliResult<()> {
    json::write_atomic(path, bytes).map_err(|e| CliError::core_at(path, e))?;
    stage.output(path);
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(stage: &mut Stage, path: &Path, value: &T) -> CliResult<()> {
    let bytes = json::to_vec(value, true).map_err(|e| CliError::core_at(path, e))?;
    write_bytes(stage, path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::file(path, e.to_string()))
}

fn canonical_inputs(stage: &mut Stage, stem: &Path) {
    let (csv, sidecar) = uavids_core::ingest::canonical_paths(stem);
    stage.input(&csv);
    stage.input(&sidecar);
}

fn load_label_map(cfg: &RunConfig) -> CliResult<Option<LabelMap>> {
    cfg.label_map
        .as_ref()
        .map(|p| LabelMap::load(p).map_err(|e| CliError::core_at(p, e)))
        .transpose()
}

/// Per-class folder tree (directory) or canonical table (stem).
fn load_dataset(cfg: &RunConfig, stage: &mut Stage, path: &Path) -> CliResult<RawDataset> {
    if path.is_dir() {
        stage.input(path);
        let lm = load_label_map(cfg)?;
        let (mut table, label_map) = scan_dataset_with(path, lm.as_ref()).map_err(|e| CliError::core_at(path, e))?;
        for col in table.drop_all_missing() {
            stage.warn(format!("column `{col}` has no values and was dropped"));
        }
        return RawDataset::new(table, label_map).map_err(|e| CliError::core_at(path, e));
    }
    canonical_inputs(stage, path);
    if cfg.label_map.is_some() {
        stage.warn("--label-map only applies when reading class folders; the table's own mapping is used");
    }
    let (table, sidecar) = read_canonical(path).map_err(|e| CliError::core_at(path, e))?;
    Ok(RawDataset {
        table,
        schema: sidecar.columns,
        label_column: sidecar.label_column,
        label_map: sidecar.label_map,
    })
}

fn dataset_path(cfg: &RunConfig, run: &RunDir, input: Option<&Path>) -> PathBuf {
    input
        .map(Path::to_path_buf)
        .or_else(|| cfg.dataset.clone())
        .unwrap_or_else(|| run.dataset())
}

fn write_dataset(run: &RunDir, stage: &mut Stage, ds: &RawDataset) -> CliResult<()> {
    let stem = run.dataset();
    write_canonical(&stem, &ds.table, &ds.schema, &ds.label_column, &ds.label_map)
        .map_err(|e| CliError::core_at(&stem, e))?;
    let (csv, sidecar) = uavids_core::ingest::canonical_paths(&stem);
    stage.output(&csv);
    stage.output(&sidecar);
    println!("wrote {} rows, {} features to {}", ds.table.row_count(), ds.schema.len(), csv.display());
    Ok(())
}

fn ingest(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, input: Option<&Path>) -> CliResult<()> {
    let root = input
        .map(Path::to_path_buf)
        .or_else(|| cfg.dataset.clone())
        .ok_or_else(|| CliError::usage("--input", "`ingest` needs --input or `dataset` in the config"))?;
    if !root.is_dir() {
        return Err(CliError::file(&root, "dataset root is not a directory"));
    }
    let ds = load_dataset(cfg, stage, &root)?;
    let unlabeled = ds.unlabeled_rows();
    if unlabeled > 0 {
        stage.warn(format!("{unlabeled} rows have no label"));
    }
    write_dataset(run, stage, &ds)
}

fn synth(cfg: &RunConfig, run: &RunDir, stage: &mut Stage) -> CliResult<()> {
    let spec = cfg.synth.clone().unwrap_or_default();
    let (table, label_map) = synthesize_dataset(&spec, cfg.seed).map_err(|e| CliError::core_flag("synth", e))?;
    let ds = RawDataset::new(table, label_map).map_err(|e| CliError::core_flag("synth", e))?;
    write_dataset(run, stage, &ds)
}

fn preprocess(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, input: Option<&Path>) -> CliResult<()> {
    let path = dataset_path(cfg, run, input);
    let ds = load_dataset(cfg, stage, &path)?;
    let p = split_and_prepare(&ds, cfg.split.train_fraction, cfg.seed, cfg.fit_on_all)
        .map_err(|e| CliError::core_at(&path, e))?;
    if p.test_report.total_unseen() > 0 {
        stage.warn(format!(
            "{} test cells hold categories unseen in training",
            p.test_report.total_unseen()
        ));
    }
    for (stem, table) in [(run.train(), &p.train), (run.test(), &p.test)] {
        write_feature_table(&stem, table).map_err(|e| CliError::core_at(&stem, e))?;
        let (csv, sidecar) = uavids_core::ingest::canonical_paths(&stem);
        stage.output(&csv);
        stage.output(&sidecar);
    }
    write_json(stage, &run.recipe(), &p.recipe)?;
    println!("train {} rows, test {} rows", p.train.n_rows(), p.test.n_rows());
    Ok(())
}

fn read_table(stage: &mut Stage, stem: &Path) -> CliResult<FeatureTable> {
    canonical_inputs(stage, stem);
    read_feature_table(stem).map_err(|e| CliError::core_at(stem, e))
}

fn train(cfg: &RunConfig, run: &RunDir, stage: &mut Stage) -> CliResult<()> {
    let train = read_table(stage, &run.train())?;
    let mut importance = ImportanceReport::new();
    for (name, spec) in cfg.resolved_models()? {
        let model = fit_model(&spec, &train, derive_seed(cfg.seed, seed_tags::MODEL))
            .map_err(|e| CliError::core_flag("--model", e))?;
        for note in &model.train_meta.notes {
            println!("{name}: {note}");
        }
        let path = run.model(&name);
        let bytes = model_io::to_bytes(&model).map_err(|e| CliError::core_at(&path, e))?;
        write_bytes(stage, &path, &bytes)?;
        let imp = gini_importance(&model);
        let csv = reports::importance_csv(&imp);
        write_bytes(stage, &run.report(&format!("importance_{name}.csv")), csv.as_bytes())?;
        importance.insert(name.clone(), imp);
        println!("trained {name} ({} trees)", model.trees.len());
    }
    write_json(stage, &run.report("importance.json"), &importance)
}

fn load_model(stage: &mut Stage, path: &Path, table: &FeatureTable) -> CliResult<EnsembleModel> {
    stage.input(path);
    let m = model_io::load(path).map_err(|e| CliError::core_at(path, e))?;
    if m.feature_names != table.feature_names || m.class_names != table.class_names {
        return Err(CliError::core_at(
            path,
            Error::SchemaMismatch("model features or classes differ from the test table".into()),
        ));
    }
    Ok(m)
}

/// Trained models among the configured ones, in configuration order.
fn available_models(
    cfg: &RunConfig,
    run: &RunDir,
    stage: &mut Stage,
    table: &FeatureTable,
) -> CliResult<Vec<(String, EnsembleModel)>> {
    let mut out = Vec::new();
    for (name, _) in cfg.resolved_models()? {
        let path = run.model(&name);
        if path.exists() {
            out.push((name, load_model(stage, &path, table)?));
        } else {
            stage.warn(format!("no trained model at {}", path.display()));
        }
    }
    if out.is_empty() {
        return Err(CliError::file(&run.0.join("models"), "no trained models; run `train` first"));
    }
    Ok(out)
}

fn evaluate(cfg: &RunConfig, run: &RunDir, stage: &mut Stage) -> CliResult<()> {
    let test = read_table(stage, &run.test())?;
    let mut report = EvaluationReport::new();
    for (name, model) in available_models(cfg, run, stage, &test)? {
        let m = uavids_core::metrics::evaluate_model(&model, &test).map_err(|e| CliError::core_at(&run.model(&name), e))?;
        for w in &m.warnings {
            stage.warn(format!("{name}: {w}"));
        }
        let csv = uavids_core::metrics::classification_report_csv(&m);
        write_bytes(stage, &run.report(&format!("classification_{name}.csv")), csv.as_bytes())?;
        println!("{name}: accuracy {:.6}, macro F1 {:.6}", m.accuracy, m.f1_macro);
        report.insert(name, m);
    }
    write_json(stage, &run.report("metrics.json"), &report)?;
    write_bytes(stage, &run.report("metrics.csv"), reports::metrics_table_csv(&report).as_bytes())
}

fn crossval(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, input: Option<&Path>) -> CliResult<()> {
    let path = dataset_path(cfg, run, input);
    let ds = load_dataset(cfg, stage, &path)?;
    let specs = cfg.resolved_models()?;
    let fs = cross_validate(&specs, &ds, cfg.split.k_folds, cfg.compare.metric, cfg.seed)
        .map_err(|e| CliError::core_at(&path, e))?;
    for (name, mean) in fs.models.iter().zip(fs.means()) {
        println!("{name}: mean {mean:.6}");
    }
    write_json(stage, &run.report("fold_scores.json"), &fs)?;
    write_bytes(stage, &run.report("fold_scores.csv"), reports::fold_scores_csv(&fs).as_bytes())
}

#[derive(Debug, Serialize)]
struct McNemarRecord<'a> {
    model_a: &'a str,
    model_b: &'a str,
    result: &'a uavids_core::statcompare::McNemarResult,
}

fn compare_contingency(run: &RunDir, stage: &mut Stage, path: &Path) -> CliResult<()> {
    stage.input(path);
    let c = reports::parse_contingency(path)?;
    let r = mcnemar_from_table(c.table);
    println!("McNemar Test: chi2 {:.4}, p-value {:.6}", r.chi2, r.p_value);
    write_json(
        stage,
        &run.report("mcnemar.json"),
        &McNemarRecord {
            model_a: &c.model_a,
            model_b: &c.model_b,
            result: &r,
        },
    )?;
    write_bytes(
        stage,
        &run.report("contingency.csv"),
        reports::contingency_csv(&c.model_a, &c.model_b, &c.table).as_bytes(),
    )?;
    let rows = vec![("McNemar Test".to_string(), r)];
    write_bytes(stage, &run.report("mcnemar.csv"), reports::mcnemar_csv(&rows).as_bytes())
}

fn compare(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, reference: Option<&str>) -> CliResult<()> {
    let fs_path = run.report("fold_scores.json");
    if !fs_path.exists() {
        return Err(CliError::file(&fs_path, "no fold scores; run `crossval` first"));
    }
    stage.input(&fs_path);
    let fs: FoldScores = read_json(&fs_path)?;
    let reference = reference.or(cfg.compare.reference.as_deref());
    let ref_idx = match reference {
        Some(r) => fs
            .models
            .iter()
            .position(|m| m == r)
            .ok_or_else(|| CliError::flag("--reference", format!("`{r}` is not among the cross-validated models")))?,
        None => fs.models.iter().position(|m| m == "rf").unwrap_or(0),
    };
    let holdout = holdout_predictions(run, stage, &fs)?;
    let opts = CompareOptions {
        bootstrap_iterations: cfg.compare.bootstrap_iterations,
        confidence: cfg.compare.confidence,
        seed: derive_seed(cfg.seed, seed_tags::BOOTSTRAP),
        ..CompareOptions::default()
    };
    let report = compare_models(&fs, ref_idx, holdout.as_ref(), &opts).map_err(|e| CliError::core_at(&fs_path, e))?;
    println!(
        "Friedman chi2 {:.4}, p-value {:.6}",
        report.friedman.statistic, report.friedman.p_value
    );
    write_json(stage, &run.report("comparison.json"), &report)?;
    write_bytes(stage, &run.report("pairwise.csv"), reports::pairwise_csv(&report).as_bytes())?;
    if holdout.is_some() {
        write_bytes(stage, &run.report("bootstrap.csv"), reports::bootstrap_csv(&report).as_bytes())?;
        let mut tests = Vec::new();
        for p in &report.pairwise {
            if let Some(m) = &p.mcnemar {
                let csv = reports::contingency_csv(&display_name(&p.model_a), &display_name(&p.model_b), &m.table);
                write_bytes(
                    stage,
                    &run.report(&format!("contingency_{}_{}.csv", p.model_a, p.model_b)),
                    csv.as_bytes(),
                )?;
                tests.push((
                    format!("McNemar Test ({} vs {})", display_name(&p.model_a), display_name(&p.model_b)),
                    m.clone(),
                ));
            }
        }
        write_bytes(stage, &run.report("mcnemar.csv"), reports::mcnemar_csv(&tests).as_bytes())?;
    }
    Ok(())
}

fn holdout_predictions(run: &RunDir, stage: &mut Stage, fs: &FoldScores) -> CliResult<Option<HoldoutPredictions>> {
    let test_stem = run.test();
    if !uavids_core::ingest::canonical_paths(&test_stem).1.exists() {
        stage.warn("no test table; bootstrap and McNemar skipped");
        return Ok(None);
    }
    let test = read_table(stage, &test_stem)?;
    let mut predictions = Vec::with_capacity(fs.models.len());
    for name in &fs.models {
        let path = run.model(name);
        if !path.exists() {
            stage.warn(format!("no trained model at {}; bootstrap and McNemar skipped", path.display()));
            return Ok(None);
        }
        let m = load_model(stage, &path, &test)?;
        predictions.push(m.predict(&test).map_err(|e| CliError::core_at(&path, e))?);
    }
    Ok(Some(HoldoutPredictions {
        n_classes: test.n_classes(),
        y_true: test.y,
        predictions,
    }))
}

fn explain(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, row: Option<usize>) -> CliResult<()> {
    let test = read_table(stage, &run.test())?;
    let rc = &cfg.reports;
    let row = row.unwrap_or(rc.lime_row);
    if rc.lime && row >= test.n_rows() {
        return Err(CliError::flag(
            "--row",
            format!("row {row} is outside the {} test rows", test.n_rows()),
        ));
    }
    for (name, model) in available_models(cfg, run, stage, &test)? {
        let mpath = run.model(&name);
        let permutation = if rc.permutation {
            let p = permutation_importance(
                &model,
                &test,
                cfg.compare.metric,
                rc.permutation_repeats,
                derive_seed(cfg.seed, seed_tags::PERMUTATION),
            )
            .map_err(|e| CliError::core_at(&mpath, e))?;
            write_bytes(
                stage,
                &run.report(&format!("permutation_{name}.csv")),
                reports::permutation_csv(&p).as_bytes(),
            )?;
            Some(p)
        } else {
            None
        };
        let shap = if rc.shap {
            let rows = explained_rows(test.n_rows(), rc.shap_rows, cfg.seed);
            let attrs = attributions(&model, &test, &rows).map_err(|e| CliError::core_at(&mpath, e))?;
            Some(
                (0..model.n_classes)
                    .map(|k| summarize(&attrs, &test, k, Some(rc.top_n)))
                    .collect(),
            )
        } else {
            None
        };
        let local = if rc.lime {
            let lime = lime_explain(&model, test.x.row(row), &rc.lime_options, derive_seed(cfg.seed, seed_tags::LIME))
                .map_err(|e| CliError::core_at(&mpath, e))?;
            let predicted = argmax(&lime.model_proba);
            let name_of = |k: usize| test.class_names.name_of(k).unwrap_or_default().to_string();
            Some(LocalExplanation {
                row,
                true_class: name_of(test.y[row]),
                predicted_class: name_of(predicted),
                lime,
            })
        } else {
            None
        };
        let report = ExplainReport {
            model: name.clone(),
            permutation,
            shap,
            local,
        };
        write_json(stage, &run.report(&format!("explain_{name}.json")), &report)?;
        println!("explained {name}");
    }
    Ok(())
}

fn ablate(cfg: &RunConfig, run: &RunDir, stage: &mut Stage, input: Option<&Path>) -> CliResult<()> {
    let path = dataset_path(cfg, run, input);
    let ds = load_dataset(cfg, stage, &path)?;
    let models = cfg.resolved_models()?;
    if models.len() > 1 {
        stage.warn(format!("ablation uses the first model only ({})", models[0].0));
    }
    let r = ablation_study(&models[0].1, &ds, &cfg.ablation, cfg.seed).map_err(|e| CliError::core_at(&path, e))?;
    for row in &r.rows {
        println!("{}: {:.6} ({:+.6})", row.configuration, row.mean, row.delta);
    }
    write_json(stage, &run.report("ablation.json"), &r)?;
    write_bytes(stage, &run.report("ablation.csv"), reports::ablation_csv(&r).as_bytes())
}

fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Read a report for rendering; a missing or unreadable one is a warning.
fn optional_report<T: DeserializeOwned>(stage: &mut Stage, path: &Path) -> Option<T> {
    if !path.exists() {
        stage.warn(format!("{} is missing; its figures are skipped", path.display()));
        return None;
    }
    match read_json(path) {
        Ok(v) => {
            stage.input(path);
            Some(v)
        }
        Err(e) => {
            stage.warn(format!("{}: {}; its figures are skipped", path.display(), e.message));
            None
        }
    }
}

fn report(cfg: &RunConfig, run: &RunDir, stage: &mut Stage) -> CliResult<()> {
    if !cfg.reports.figures {
        stage.warn("figures are disabled in the configuration");
        return Ok(());
    }
    let top_n = cfg.reports.top_n;
    let mut figures: Vec<(String, String)> = Vec::new();
    if let Some(metrics) = optional_report::<EvaluationReport>(stage, &run.report("metrics.json")) {
        for (name, m) in &metrics {
            let title = display_name(name);
            figures.push((
                format!("confusion_{name}.svg"),
                svg::confusion_heatmap(&format!("Confusion Matrix for {title}"), &m.class_names, &m.confusion.counts),
            ));
            let series: Vec<svg::RocSeries> = m
                .roc_curves
                .iter()
                .map(|c| svg::RocSeries {
                    label: m.class_names.get(c.class_index).map_or("?", String::as_str),
                    auc: c.auc,
                    fpr: &c.fpr,
                    tpr: &c.tpr,
                })
                .collect();
            figures.push((
                format!("roc_{name}.svg"),
                svg::roc_overlay(&format!("ROC Curve for Multiclass Classification ({title})"), &series),
            ));
        }
    }
    if let Some(imp) = optional_report::<ImportanceReport>(stage, &run.report("importance.json")) {
        for (name, items) in &imp {
            let bars: Vec<(String, f64)> = items.iter().take(top_n).map(|f| (f.name.clone(), f.importance)).collect();
            figures.push((
                format!("importance_{name}.svg"),
                svg::importance_bars(
                    &format!("Top {top_n} Important Features ({})", display_name(name)),
                    "Importance",
                    &bars,
                    None,
                ),
            ));
        }
    }
    for (name, _) in cfg.resolved_models()? {
        let Some(ex) = optional_report::<ExplainReport>(stage, &run.report(&format!("explain_{name}.json"))) else {
            continue;
        };
        let title = display_name(&name);
        if let Some(p) = &ex.permutation {
            let rows: Vec<_> = p.rows.iter().take(top_n).collect();
            let bars: Vec<(String, f64)> = rows.iter().map(|r| (r.name.clone(), r.mean)).collect();
            let err: Vec<f64> = rows.iter().map(|r| r.std).collect();
            figures.push((
                format!("permutation_{name}.svg"),
                svg::importance_bars(
                    &format!("Permutation Importance ({title})"),
                    "Mean metric drop",
                    &bars,
                    Some(&err),
                ),
            ));
        } else {
            stage.warn(format!("explain_{name}.json has no permutation section"));
        }
        match &ex.shap {
            Some(summaries) => {
                for s in summaries {
                    let rows: Vec<svg::StripRow> = s
                        .features
                        .iter()
                        .map(|f| svg::StripRow {
                            name: &f.name,
                            points: &f.points,
                        })
                        .collect();
                    figures.push((
                        format!("shap_{name}_{}.svg", file_token(&s.class_name)),
                        svg::shap_strip(&format!("Global SHAP for Class {} ({title})", s.class_name), &rows),
                    ));
                }
            }
            None => stage.warn(format!("explain_{name}.json has no SHAP section")),
        }
        match &ex.local {
            Some(l) => {
                let predicted = argmax(&l.lime.model_proba);
                let items: Vec<(String, f64)> = l
                    .lime
                    .classes
                    .iter()
                    .find(|c| c.class_index == predicted)
                    .map(|c| c.top.iter().map(|t| (t.name.clone(), t.weighted)).collect())
                    .unwrap_or_default();
                figures.push((
                    format!("lime_{name}.svg"),
                    svg::force_bars(
                        &format!("Local Explanation for the Sample Index {}", l.row),
                        &format!(
                            "{title}: predicted {}, actual {}",
                            l.predicted_class, l.true_class
                        ),
                        &items,
                    ),
                ));
            }
            None => stage.warn(format!("explain_{name}.json has no local explanation")),
        }
    }
    for (file, body) in figures {
        write_bytes(stage, &run.figure(&file), body.as_bytes())?;
    }
    println!("{} warnings", stage.warnings.len());
    Ok(())
}
