//! End-to-end workflow: load, summarize, split, preprocess, oversample,
//! train, evaluate, cross-validate, compare, explain, and write the report.
//!
//! Every component seed is `derive_seed(master_seed, component, index)` and
//! is echoed in the report's `seeds` section.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::evaluate::{
    self, compare_prepared, cross_validate, model_seed, partition_hash, ComparisonTable, CvOptions,
    CvReport, MetricsReport,
};
use crate::explain::{self, ExplainOptions, FeatureImportance, GlobalImportance, OutputSpace};
use crate::ingest::{self, DatasetSummary, TabularDataset};
use crate::matrix::Matrix;
use crate::models::{train_model, Model, ModelArtifact, ModelSpec};
use crate::preprocess::{self, FitArtifacts, SplitIndices};
use crate::resample::{smote, SmoteConfig, SmoteOutput};
use crate::seed::derive_seed;
use crate::svg;

/// Master seed used when neither the config, the CLI nor `DISTRESS_SEED` sets one.
pub const DEFAULT_MASTER_SEED: u64 = 42;
pub const SEED_ENV_VAR: &str = "DISTRESS_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub input: Option<PathBuf>,
    #[serde(default = "DataSection::default_label")]
    pub label_column: String,
}

impl DataSection {
    fn default_label() -> String {
        "Bankrupt?".to_string()
    }
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            input: None,
            label_column: Self::default_label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub test_fraction: f64,
    pub correlation_threshold: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            test_fraction: 0.2,
            correlation_threshold: preprocess::DEFAULT_CORRELATION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k_neighbors: usize,
    pub target_ratio: f64,
    pub seed: Option<u64>,
}

impl Default for SmoteSection {
    fn default() -> Self {
        let d = SmoteConfig::default();
        SmoteSection {
            enabled: true,
            k_neighbors: d.k_neighbors,
            target_ratio: d.target_ratio,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub threshold: f64,
    pub cv_folds: usize,
    pub cross_validate: bool,
    /// Also score every model without oversampling for the SMOTE comparison.
    pub compare_without_smote: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            threshold: evaluate::DEFAULT_THRESHOLD,
            cv_folds: 5,
            cross_validate: true,
            compare_without_smote: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainSection {
    pub enabled: bool,
    pub background_size: usize,
    /// Test rows explained for the global summary.
    pub max_rows: usize,
    pub n_permutations: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection {
            enabled: true,
            background_size: explain::DEFAULT_BACKGROUND_SIZE,
            max_rows: 200,
            n_permutations: 200,
        }
    }
}

/// Run configuration. TOML (sections per stage) or JSON with the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "PipelineConfig::default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub smote: SmoteSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub explain: ExplainSection,
    /// Empty means the default six-model lineup.
    #[serde(default)]
    pub models: Vec<ModelSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            master_seed: None,
            output_dir: Self::default_output_dir(),
            data: DataSection::default(),
            preprocess: PreprocessSection::default(),
            smote: SmoteSection::default(),
            evaluate: EvaluateSection::default(),
            explain: ExplainSection::default(),
            models: Vec::new(),
        }
    }
}

impl PipelineConfig {
    fn default_output_dir() -> PathBuf {
        PathBuf::from("distress_out")
    }

    pub fn from_str_with_format(text: &str, json: bool) -> Result<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    /// `.json` files parse as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::from_str_with_format(&text, json)
    }

    /// Fills every default so the report can echo the complete configuration.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = self.clone();
        let master = match cfg.master_seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV_VAR) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "{SEED_ENV_VAR} must be an unsigned integer, got `{v}`"
                    ))
                })?,
                Err(_) => DEFAULT_MASTER_SEED,
            },
        };
        cfg.master_seed = Some(master);
        if cfg.models.is_empty() {
            cfg.models = ModelSpec::default_lineup();
        }
        for spec in &mut cfg.models {
            spec.seed = Some(model_seed(master, spec));
        }
        let mut names: Vec<&str> = cfg.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("model names must be unique".into()));
        }
        if cfg.smote.seed.is_none() {
            cfg.smote.seed = Some(derive_seed(master, "smote", 0));
        }
        Ok(cfg)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(DEFAULT_MASTER_SEED)
    }

    pub fn smote_config(&self) -> Option<SmoteConfig> {
        self.smote.enabled.then(|| SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            target_ratio: self.smote.target_ratio,
            seed: self
                .smote
                .seed
                .unwrap_or_else(|| derive_seed(self.master_seed(), "smote", 0)),
        })
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.data
            .input
            .as_deref()
            .ok_or_else(|| Error::Config("no input dataset given (data.input or --input)".into()))
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        let m = self.master_seed();
        let mut s = BTreeMap::new();
        s.insert("master".into(), m);
        s.insert("split".into(), derive_seed(m, "split", 0));
        s.insert("cv".into(), derive_seed(m, "cv", 0));
        s.insert("background".into(), derive_seed(m, "background", 0));
        s.insert("explain_rows".into(), derive_seed(m, "explain-rows", 0));
        s.insert("explain".into(), derive_seed(m, "explain", 0));
        if let Some(c) = self.smote_config() {
            s.insert("smote".into(), c.seed);
        }
        for spec in &self.models {
            s.insert(format!("model/{}", spec.name), model_seed(m, spec));
        }
        s
    }
}

/// Holdout data after train-fitted preprocessing and optional oversampling.
#[derive(Debug, Clone)]
pub struct Holdout {
    pub split: SplitIndices,
    pub artifacts: FitArtifacts,
    pub x_train: Matrix,
    pub y_train: Vec<u8>,
    pub x_test: Matrix,
    pub y_test: Vec<u8>,
    pub smote: Option<SmoteOutput>,
    pub test_hash_before_smote: String,
    pub test_hash_after_smote: String,
}

impl Holdout {
    fn as_prepared(&self, with_smote: bool) -> evaluate::PreparedPartition {
        let (x_train, y_train) = match (&self.smote, with_smote) {
            (Some(s), true) => (s.features.clone(), s.labels.clone()),
            _ => (self.x_train.clone(), self.y_train.clone()),
        };
        evaluate::PreparedPartition {
            artifacts: self.artifacts.clone(),
            n_train_original: self.x_train.n_rows(),
            x_train,
            y_train,
            x_test: self.x_test.clone(),
            y_test: self.y_test.clone(),
            smote: None,
            test_hash_before_smote: self.test_hash_before_smote.clone(),
            test_hash_after_smote: self.test_hash_after_smote.clone(),
        }
    }

    /// Training rows the models see (oversampled when SMOTE ran).
    pub fn training_set(&self) -> (&Matrix, &[u8]) {
        match &self.smote {
            Some(s) => (&s.features, &s.labels),
            None => (&self.x_train, &self.y_train),
        }
    }
}

pub fn prepare_holdout(dataset: &TabularDataset, cfg: &PipelineConfig) -> Result<Holdout> {
    let split_seed = derive_seed(cfg.master_seed(), "split", 0);
    let split =
        preprocess::stratified_split(dataset.labels(), cfg.preprocess.test_fraction, split_seed)
            .stage("split")?;
    let train = dataset.subset(&split.train);
    let test = dataset.subset(&split.test);
    let artifacts = preprocess::fit(&train, cfg.preprocess.correlation_threshold, split_seed)
        .stage("preprocess")?;
    let x_train = artifacts.transform_matrix(&train).stage("preprocess")?;
    let x_test = artifacts.transform_matrix(&test).stage("preprocess")?;
    let y_train = train.labels().to_vec();
    let y_test = test.labels().to_vec();
    let test_hash_before_smote = partition_hash(&x_test, &y_test);
    let smote_out = match cfg.smote_config() {
        Some(c) => Some(smote(&x_train, &y_train, &c).stage("smote")?),
        None => None,
    };
    let test_hash_after_smote = partition_hash(&x_test, &y_test);
    Ok(Holdout {
        split,
        artifacts,
        x_train,
        y_train,
        x_test,
        y_test,
        smote: smote_out,
        test_hash_before_smote,
        test_hash_after_smote,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitReport {
    pub test_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_positive: usize,
    pub test_positive: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnStats {
    pub feature: String,
    pub median: f64,
    pub mean: f64,
    pub stddev: f64,
    pub constant: bool,
    pub retained: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessingReport {
    pub correlation_threshold: f64,
    pub n_features_in: usize,
    pub n_features_retained: usize,
    pub retained: Vec<String>,
    pub dropped: Vec<String>,
    pub columns: Vec<ColumnStats>,
    pub scaler_sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteReport {
    pub k_neighbors: usize,
    pub target_ratio: f64,
    pub seed: u64,
    pub distance: String,
    pub minority_before: usize,
    pub majority: usize,
    pub minority_after: usize,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub test_hash_before_smote: String,
    pub test_hash_after_smote: String,
    pub unchanged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub family: String,
    pub seed: u64,
    pub spec: ModelSpec,
    pub holdout: MetricsReport,
    pub holdout_without_smote: Option<MetricsReport>,
    pub cross_validation: Option<CvReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub rank: usize,
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteEffect {
    pub model: String,
    pub recall_without_smote: f64,
    pub recall_with_smote: f64,
    pub precision_without_smote: f64,
    pub precision_with_smote: f64,
    pub roc_auc_without_smote: f64,
    pub roc_auc_with_smote: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub model: String,
    pub output_space: OutputSpace,
    pub method: String,
    pub background_size: usize,
    pub n_rows_explained: usize,
    pub max_additivity_gap: f64,
    pub ranking: Vec<FeatureImportance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: PipelineConfig,
    pub seeds: BTreeMap<String, u64>,
    pub metric_conventions: BTreeMap<String, String>,
    pub dataset: DatasetSummary,
    pub split: SplitReport,
    pub preprocessing: PreprocessingReport,
    pub smote: Option<SmoteReport>,
    pub leakage_audit: LeakageAudit,
    pub models: Vec<ModelReport>,
    /// Holdout results ranked by recall, then ROC-AUC.
    pub comparison: Vec<ComparisonEntry>,
    pub smote_comparison: Vec<SmoteEffect>,
    pub best_model: String,
    pub explanation: Option<ExplanationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Omit wall-clock timings so reports compare byte for byte.
    pub normalize_report: bool,
}

struct Timer {
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps
            .insert(name.to_string(), (now - self.start).as_secs_f64() * 1e3);
        self.start = now;
    }
}

fn conventions() -> BTreeMap<String, String> {
    [
        ("positive_class", "label 1 (minority, bankrupt)"),
        ("decision_rule", "predict 1 iff score >= threshold"),
        (
            "zero_denominator",
            "precision, recall and f1 are 0 when their denominator is 0",
        ),
        (
            "roc_auc",
            "Mann-Whitney rank statistic, tied scores share average ranks",
        ),
        ("stddev", "population convention (divide by n)"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(Error::from)
}

fn model_file_name(name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("model_{safe}.json")
}

/// Runs the whole workflow and writes all outputs under `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig, options: &RunOptions) -> Result<RunReport> {
    let cfg = config.resolve().stage("config")?;
    let master = cfg.master_seed();
    let mut timer = Timer::new();

    let dataset = ingest::load_csv(cfg.input_path().stage("config")?, &cfg.data.label_column)
        .stage("ingest")?;
    let summary = ingest::summarize(&dataset).stage("summarize")?;
    timer.lap("ingest");

    let holdout = prepare_holdout(&dataset, &cfg)?;
    timer.lap("preprocess_and_smote");

    let with_smote = compare_prepared(
        &holdout.as_prepared(true),
        &cfg.models,
        master,
        cfg.evaluate.threshold,
    )
    .stage("train")?;
    let without_smote = if holdout.smote.is_some() && cfg.evaluate.compare_without_smote {
        Some(
            compare_prepared(
                &holdout.as_prepared(false),
                &cfg.models,
                master,
                cfg.evaluate.threshold,
            )
            .stage("train")?,
        )
    } else {
        None
    };
    timer.lap("holdout");

    let mut cv_reports = BTreeMap::new();
    if cfg.evaluate.cross_validate {
        let cv_opts = CvOptions {
            k: cfg.evaluate.cv_folds,
            seed: derive_seed(master, "cv", 0),
            correlation_threshold: cfg.preprocess.correlation_threshold,
            smote: cfg.smote_config(),
            threshold: cfg.evaluate.threshold,
        };
        for spec in &cfg.models {
            let r = cross_validate(&dataset, spec, &cv_opts).stage("cross_validate")?;
            cv_reports.insert(spec.name.clone(), r);
        }
    }
    timer.lap("cross_validation");

    let out = &cfg.output_dir;
    fs::create_dir_all(out.join("figures")).stage("write")?;

    // Retrain for the saved artifacts; identical seeds reproduce the scored models.
    let background = explain::sample_background(
        &holdout.x_train,
        cfg.explain.background_size,
        derive_seed(master, "background", 0),
    );
    let (x_fit, y_fit) = holdout.training_set();
    let mut trained: BTreeMap<String, Model> = BTreeMap::new();
    for spec in &cfg.models {
        let seed = model_seed(master, spec);
        let model = train_model(spec, x_fit, y_fit, seed).stage("train")?;
        let artifact = ModelArtifact::new(
            spec.clone(),
            seed,
            &cfg.data.label_column,
            holdout.artifacts.clone(),
            &background,
            model.clone(),
        );
        artifact
            .save(&out.join(model_file_name(&spec.name)))
            .stage("write")?;
        trained.insert(spec.name.clone(), model);
    }
    timer.lap("artifacts");

    let best = with_smote.best().expect("at least one model").model.clone();
    let feature_names = holdout.artifacts.retained_names();
    let explanation = if cfg.explain.enabled {
        let model = &trained[&best];
        let picked = explain::sample_indices(
            holdout.x_test.n_rows(),
            cfg.explain.max_rows,
            derive_seed(master, "explain-rows", 0),
        );
        let rows = holdout.x_test.select_rows(&picked);
        let opts = ExplainOptions {
            n_permutations: cfg.explain.n_permutations,
            seed: derive_seed(master, "explain", 0),
            ..ExplainOptions::default()
        };
        let expl = explain::explain_rows(model, &rows, &background, &opts).stage("explain")?;
        let global = GlobalImportance::from_explanations(&expl, &feature_names).stage("explain")?;
        let ids: Vec<usize> = picked.iter().map(|&i| holdout.split.test[i]).collect();
        let mut buf = Vec::new();
        explain::write_explanations_csv(&mut buf, &ids, &expl, &feature_names).stage("write")?;
        write_file(&out.join(format!("shap_{best}.csv")), &buf).stage("write")?;
        let mut buf = Vec::new();
        global.write_csv(&mut buf).stage("write")?;
        write_file(&out.join(format!("shap_importance_{best}.csv")), &buf).stage("write")?;
        write_file(
            &out.join("figures/shap_summary.svg"),
            svg::shap_summary(&global, 20),
        )
        .stage("write")?;
        let method = match &model.predictor {
            crate::models::Predictor::Ensemble(_) => "tree_shap",
            crate::models::Predictor::Linear(_)
                if feature_names.len() <= opts.max_exact_features =>
            {
                "exact_shapley"
            }
            crate::models::Predictor::Linear(_) => "permutation_sampling",
        };
        Some(ExplanationReport {
            model: best.clone(),
            output_space: model.output_space(),
            method: method.to_string(),
            background_size: background.n_rows(),
            n_rows_explained: expl.len(),
            max_additivity_gap: expl
                .iter()
                .map(|e| e.additivity_gap().abs())
                .fold(0.0, f64::max),
            ranking: global.ranking,
        })
    } else {
        None
    };
    timer.lap("explain");

    // metrics CSV and figures
    let mut buf = Vec::new();
    with_smote.write_csv(&mut buf).stage("write")?;
    write_file(&out.join("metrics.csv"), &buf).stage("write")?;
    if let Some(s) = &holdout.smote {
        let mut buf = Vec::new();
        s.write_audit(&mut buf).stage("write")?;
        write_file(&out.join("smote_audit.csv"), &buf).stage("write")?;
    }
    let train_pos = holdout.y_train.iter().filter(|&&y| y == 1).count();
    let before = (holdout.y_train.len() - train_pos, train_pos);
    let after = holdout.smote.as_ref().map(|s| {
        let p = s.labels.iter().filter(|&&y| y == 1).count();
        (s.labels.len() - p, p)
    });
    write_file(
        &out.join("figures/class_distribution.svg"),
        svg::class_distribution(before, after),
    )
    .stage("write")?;
    let curves = with_smote
        .rows
        .iter()
        .map(|r| {
            Ok((
                r.model.clone(),
                evaluate::roc_curve(&r.scores, &holdout.y_test)?,
                r.metrics.roc_auc,
            ))
        })
        .collect::<Result<Vec<_>>>()
        .stage("write")?;
    write_file(
        &out.join("figures/roc_overlay.svg"),
        svg::roc_overlay(&curves),
    )
    .stage("write")?;
    let best_row = with_smote.best().expect("at least one model");
    write_file(
        &out.join("figures/confusion_matrix.svg"),
        svg::confusion_grid(&best_row.metrics.confusion, &best),
    )
    .stage("write")?;
    timer.lap("write");

    let report = assemble_report(
        &cfg,
        &summary,
        &holdout,
        &with_smote,
        without_smote.as_ref(),
        cv_reports,
        explanation,
        &timer,
        options,
    );
    write_file(
        &out.join("report.json"),
        serde_json::to_string_pretty(&report).stage("write")? + "\n",
    )
    .stage("write")?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    cfg: &PipelineConfig,
    summary: &DatasetSummary,
    holdout: &Holdout,
    with_smote: &ComparisonTable,
    without_smote: Option<&ComparisonTable>,
    mut cv_reports: BTreeMap<String, CvReport>,
    explanation: Option<ExplanationReport>,
    timer: &Timer,
    options: &RunOptions,
) -> RunReport {
    let a = &holdout.artifacts;
    let columns = (0..a.feature_names.len())
        .map(|j| ColumnStats {
            feature: a.feature_names[j].clone(),
            median: a.medians[j],
            mean: a.means[j],
            stddev: a.stddevs[j],
            constant: a.constant_columns[j],
            retained: a.retained_columns[j],
        })
        .collect();
    let count_pos = |rows: &[usize]| rows.iter().filter(|&&i| summary_label(holdout, i)).count();
    let find = |t: &ComparisonTable, name: &str| {
        t.rows
            .iter()
            .find(|r| r.model == name)
            .map(|r| r.metrics.clone())
    };
    let models = cfg
        .models
        .iter()
        .map(|spec| {
            let row = with_smote
                .rows
                .iter()
                .find(|r| r.model == spec.name)
                .expect("every spec is scored");
            ModelReport {
                name: spec.name.clone(),
                family: spec.family().as_str().to_string(),
                seed: row.seed,
                spec: spec.clone(),
                holdout: row.metrics.clone(),
                holdout_without_smote: without_smote.and_then(|t| find(t, &spec.name)),
                cross_validation: cv_reports.remove(&spec.name),
            }
        })
        .collect();
    let comparison = with_smote
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| ComparisonEntry {
            rank: i + 1,
            model: r.model.clone(),
            precision: r.metrics.precision,
            recall: r.metrics.recall,
            f1: r.metrics.f1,
            roc_auc: r.metrics.roc_auc,
        })
        .collect();
    let smote_comparison = without_smote
        .map(|t| {
            cfg.models
                .iter()
                .filter_map(|spec| {
                    let w = find(with_smote, &spec.name)?;
                    let wo = find(t, &spec.name)?;
                    Some(SmoteEffect {
                        model: spec.name.clone(),
                        recall_without_smote: wo.recall,
                        recall_with_smote: w.recall,
                        precision_without_smote: wo.precision,
                        precision_with_smote: w.precision,
                        roc_auc_without_smote: wo.roc_auc,
                        roc_auc_with_smote: w.roc_auc,
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    RunReport {
        schema_version: crate::SCHEMA_VERSION,
        tool_version: crate::VERSION.to_string(),
        config: cfg.clone(),
        seeds: cfg.seeds(),
        metric_conventions: conventions(),
        dataset: summary.clone(),
        split: SplitReport {
            test_fraction: cfg.preprocess.test_fraction,
            n_train: holdout.split.train.len(),
            n_test: holdout.split.test.len(),
            train_positive: count_pos(&holdout.split.train),
            test_positive: count_pos(&holdout.split.test),
        },
        preprocessing: PreprocessingReport {
            correlation_threshold: a.correlation_threshold,
            n_features_in: a.feature_names.len(),
            n_features_retained: a.retained_indices().len(),
            retained: a.retained_names(),
            dropped: a.dropped_names(),
            columns,
            scaler_sha256: a.sha256(),
        },
        smote: holdout.smote.as_ref().map(|s| SmoteReport {
            k_neighbors: cfg.smote.k_neighbors,
            target_ratio: cfg.smote.target_ratio,
            seed: cfg.smote_config().map_or(0, |c| c.seed),
            distance: "euclidean (standardized features)".into(),
            minority_before: s.minority_before,
            majority: s.majority_count,
            minority_after: s.minority_before + s.n_synthetic(),
            n_synthetic: s.n_synthetic(),
        }),
        leakage_audit: LeakageAudit {
            unchanged: holdout.test_hash_before_smote == holdout.test_hash_after_smote,
            test_hash_before_smote: holdout.test_hash_before_smote.clone(),
            test_hash_after_smote: holdout.test_hash_after_smote.clone(),
        },
        models,
        comparison,
        smote_comparison,
        best_model: with_smote
            .best()
            .map(|r| r.model.clone())
            .unwrap_or_default(),
        explanation,
        timings_ms: (!options.normalize_report).then(|| timer.laps.clone()),
    }
}

fn summary_label(holdout: &Holdout, row: usize) -> bool {
    // split indices refer to dataset rows; recover labels through the partitions
    if let Ok(pos) = holdout.split.train.binary_search(&row) {
        return holdout.y_train[pos] == 1;
    }
    holdout
        .split
        .test
        .binary_search(&row)
        .map(|pos| holdout.y_test[pos] == 1)
        .unwrap_or(false)
}

/// Trains one spec on the holdout training partition and packages it.
pub fn train_single(config: &PipelineConfig, model_name: Option<&str>) -> Result<ModelArtifact> {
    let cfg = config.resolve().stage("config")?;
    let spec = match model_name {
        Some(n) => cfg
            .models
            .iter()
            .find(|m| m.name == n)
            .ok_or_else(|| Error::Config(format!("no model named `{n}` in the configuration")))
            .stage("config")?,
        None => &cfg.models[0],
    }
    .clone();
    let dataset = ingest::load_csv(cfg.input_path().stage("config")?, &cfg.data.label_column)
        .stage("ingest")?;
    let holdout = prepare_holdout(&dataset, &cfg)?;
    let (x, y) = holdout.training_set();
    let seed = model_seed(cfg.master_seed(), &spec);
    let model = train_model(&spec, x, y, seed).stage("train")?;
    let background = explain::sample_background(
        &holdout.x_train,
        cfg.explain.background_size,
        derive_seed(cfg.master_seed(), "background", 0),
    );
    Ok(ModelArtifact::new(
        spec,
        seed,
        &cfg.data.label_column,
        holdout.artifacts,
        &background,
        model,
    ))
}

/// Scores a saved model on a raw labelled dataset.
pub fn evaluate_artifact(
    artifact: &ModelArtifact,
    dataset: &TabularDataset,
    threshold: f64,
) -> Result<MetricsReport> {
    let x = artifact.transform(dataset).stage("evaluate")?;
    let scores = artifact.model.predict_proba(&x).stage("evaluate")?;
    MetricsReport::compute(&scores, dataset.labels(), threshold).stage("evaluate")
}

/// Explains every row of a raw dataset with a saved model.
pub fn explain_artifact(
    artifact: &ModelArtifact,
    dataset: &TabularDataset,
    options: &ExplainOptions,
) -> Result<(Vec<explain::ShapExplanation>, GlobalImportance)> {
    let x = artifact.transform(dataset).stage("explain")?;
    let background = artifact.background_matrix().stage("explain")?;
    let expl = explain::explain_rows(&artifact.model, &x, &background, options).stage("explain")?;
    let global =
        GlobalImportance::from_explanations(&expl, &artifact.feature_names).stage("explain")?;
    Ok((expl, global))
}

/// Holdout comparison of every configured model.
pub fn compare(config: &PipelineConfig) -> Result<ComparisonTable> {
    let cfg = config.resolve().stage("config")?;
    let dataset = ingest::load_csv(cfg.input_path().stage("config")?, &cfg.data.label_column)
        .stage("ingest")?;
    let holdout = prepare_holdout(&dataset, &cfg)?;
    compare_prepared(
        &holdout.as_prepared(true),
        &cfg.models,
        cfg.master_seed(),
        cfg.evaluate.threshold,
    )
    .stage("train")
}
