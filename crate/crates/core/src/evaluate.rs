//! Minority-class evaluation: confusion counts, precision/recall/F1,
//! rank-based ROC-AUC, stratified folds, cross-validation and model
//! comparison. Label 1 is always the positive class.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TabularDataset;
use crate::matrix::Matrix;
use crate::models::{train_model, ModelSpec, Scorer};
use crate::preprocess::{self, FitArtifacts};
use crate::resample::{smote, SmoteConfig, SmoteOutput};
use crate::seed::{derive_seed, derived_rng, sha256_hex};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score at row {i}")));
    }
    Ok(())
}

/// Predicts positive iff `score >= threshold`.
pub fn confusion_at_threshold(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ConfusionMatrix> {
    check_scores(scores, labels)?;
    let mut cm = ConfusionMatrix::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Zero denominators yield 0 rather than NaN.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    (precision, recall, f1_score(precision, recall))
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Mann-Whitney form: `(sum of positive ranks - n+(n+ + 1)/2) / (n+ n-)`.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one per distinct score.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    for (i, &k) in order.iter().enumerate() {
        if labels[k] == 1 {
            tp += 1.0;
        } else {
            fp += 1.0;
        }
        if i + 1 == order.len() || scores[order[i + 1]] != scores[k] {
            points.push((fp / n_neg, tp / n_pos));
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub n_rows: usize,
    pub n_positive: usize,
}

impl MetricsReport {
    pub fn compute(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        let confusion = confusion_at_threshold(scores, labels, threshold)?;
        let (precision, recall, f1) = precision_recall_f1(&confusion);
        Ok(MetricsReport {
            precision,
            recall,
            f1,
            roc_auc: roc_auc(scores, labels)?,
            threshold,
            confusion,
            n_rows: labels.len(),
            n_positive: confusion.tp + confusion.fn_,
        })
    }

    fn values(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.roc_auc]
    }
}

/// Per-class seeded shuffle, then round-robin assignment. Positives are dealt
/// first; negatives continue the rotation where positives stopped, so fold
/// sizes also differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let minority = labels.iter().filter(|&&y| y == 1).count();
    let minority = minority.min(labels.len() - minority);
    if k < 2 || minority < k {
        return Err(Error::MinoritySmallerThanK { minority, k });
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [1u8, 0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut derived_rng(seed, "kfold", u64::from(class)));
        for (i, &m) in members.iter().enumerate() {
            folds[(offset + i) % k].push(m);
        }
        offset = (offset + members.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Hash of a feature block and its labels, used for the leakage audit.
pub fn partition_hash(x: &Matrix, labels: &[u8]) -> String {
    let mut bytes = Vec::with_capacity(x.as_slice().len() * 8 + labels.len());
    for v in x.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(labels);
    sha256_hex(&bytes)
}

/// A train/test partition after train-fitted preprocessing and optional SMOTE.
#[derive(Debug, Clone)]
pub struct PreparedPartition {
    pub artifacts: FitArtifacts,
    pub x_train: Matrix,
    pub y_train: Vec<u8>,
    pub x_test: Matrix,
    pub y_test: Vec<u8>,
    /// Training rows before oversampling (standardized).
    pub n_train_original: usize,
    pub smote: Option<SmoteOutput>,
    pub test_hash_before_smote: String,
    pub test_hash_after_smote: String,
}

pub fn prepare_partition(
    dataset: &TabularDataset,
    train_rows: &[usize],
    test_rows: &[usize],
    correlation_threshold: f64,
    split_seed: u64,
    smote_config: Option<&SmoteConfig>,
) -> Result<PreparedPartition> {
    let train = dataset.subset(train_rows);
    let test = dataset.subset(test_rows);
    let artifacts = preprocess::fit(&train, correlation_threshold, split_seed)?;
    let x_train = artifacts.transform_matrix(&train)?;
    let x_test = artifacts.transform_matrix(&test)?;
    let y_test = test.labels().to_vec();
    let test_hash_before_smote = partition_hash(&x_test, &y_test);
    let n_train_original = x_train.n_rows();
    let (x_train, y_train, smote_out) = match smote_config {
        Some(cfg) => {
            let out = smote(&x_train, train.labels(), cfg)?;
            (out.features.clone(), out.labels.clone(), Some(out))
        }
        None => (x_train, train.labels().to_vec(), None),
    };
    let test_hash_after_smote = partition_hash(&x_test, &y_test);
    Ok(PreparedPartition {
        artifacts,
        x_train,
        y_train,
        x_test,
        y_test,
        n_train_original,
        smote: smote_out,
        test_hash_before_smote,
        test_hash_after_smote,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

impl From<[f64; 4]> for MetricValues {
    fn from(v: [f64; 4]) -> Self {
        MetricValues {
            precision: v[0],
            recall: v[1],
            f1: v[2],
            roc_auc: v[3],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub artifacts: Option<FitArtifacts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub mean: MetricValues,
    /// Population standard deviation across folds.
    pub stddev: MetricValues,
}

/// Seeds: fold assignment uses `seed`; fold `f` oversamples with
/// `derive_seed(smote.seed, "cv-smote", f)` and trains with
/// `derive_seed(seed, "cv-model", f)`.
#[derive(Debug, Clone)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub correlation_threshold: f64,
    pub smote: Option<SmoteConfig>,
    pub threshold: f64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 5,
            seed: 0,
            correlation_threshold: preprocess::DEFAULT_CORRELATION_THRESHOLD,
            smote: Some(SmoteConfig::default()),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

pub fn cross_validate(
    dataset: &TabularDataset,
    spec: &ModelSpec,
    options: &CvOptions,
) -> Result<CvReport> {
    cross_validate_with(dataset, options, |x, y, seed| {
        Ok(Box::new(train_model(spec, x, y, seed)?) as Box<dyn Scorer>)
    })
}

/// Cross-validation with a caller-supplied trainer.
pub fn cross_validate_with<F>(
    dataset: &TabularDataset,
    options: &CvOptions,
    trainer: F,
) -> Result<CvReport>
where
    F: Fn(&Matrix, &[u8], u64) -> Result<Box<dyn Scorer>> + Sync,
{
    let folds = stratified_kfold(dataset.labels(), options.k, options.seed)?;
    let results = (0..options.k)
        .into_par_iter()
        .map(|f| {
            let test_rows = &folds[f];
            let train_rows: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect::<Vec<_>>();
            let mut train_rows = train_rows;
            train_rows.sort_unstable();
            let smote_cfg = options.smote.as_ref().map(|c| SmoteConfig {
                seed: derive_seed(c.seed, "cv-smote", f as u64),
                ..c.clone()
            });
            let prepared = prepare_partition(
                dataset,
                &train_rows,
                test_rows,
                options.correlation_threshold,
                options.seed,
                smote_cfg.as_ref(),
            )?;
            let scorer = trainer(
                &prepared.x_train,
                &prepared.y_train,
                derive_seed(options.seed, "cv-model", f as u64),
            )?;
            let scores = scorer.predict_proba(&prepared.x_test)?;
            Ok(FoldResult {
                fold: f,
                n_train: train_rows.len(),
                n_test: test_rows.len(),
                metrics: MetricsReport::compute(&scores, &prepared.y_test, options.threshold)?,
                artifacts: Some(prepared.artifacts),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, stddev) = summarize_folds(&results);
    Ok(CvReport {
        k: options.k,
        seed: options.seed,
        folds: results,
        mean,
        stddev,
    })
}

fn summarize_folds(folds: &[FoldResult]) -> (MetricValues, MetricValues) {
    let n = folds.len() as f64;
    let mut mean = [0.0; 4];
    for f in folds {
        for (m, v) in mean.iter_mut().zip(f.metrics.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 4];
    for f in folds {
        for ((s, v), m) in var.iter_mut().zip(f.metrics.values()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.map(|s| (s / n).sqrt());
    (mean.into(), std.into())
}

/// Shared data conditions for every model in a comparison.
#[derive(Debug, Clone)]
pub struct HoldoutOptions {
    pub test_fraction: f64,
    pub correlation_threshold: f64,
    pub smote: Option<SmoteConfig>,
    pub threshold: f64,
    /// Split seed; model seeds are derived from it by model name.
    pub seed: u64,
}

impl Default for HoldoutOptions {
    fn default() -> Self {
        HoldoutOptions {
            test_fraction: 0.2,
            correlation_threshold: preprocess::DEFAULT_CORRELATION_THRESHOLD,
            smote: Some(SmoteConfig::default()),
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
        }
    }
}

/// Seed a model trains with when its spec carries none.
pub fn model_seed(master: u64, spec: &ModelSpec) -> u64 {
    spec.seed
        .unwrap_or_else(|| derive_seed(master, &format!("model/{}", spec.name), 0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub family: String,
    pub seed: u64,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Sorted by recall, then ROC-AUC, both descending; input order breaks ties.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub const CSV_HEADER: [&'static str; 5] = ["Model", "Precision", "Recall", "F1", "ROC-AUC"];

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            let m = &r.metrics;
            w.write_record([
                r.model.clone(),
                format!("{:.4}", m.precision),
                format!("{:.4}", m.recall),
                format!("{:.4}", m.f1),
                format!("{:.4}", m.roc_auc),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn best(&self) -> Option<&ComparisonRow> {
        self.rows.first()
    }
}

pub fn rank_rows(rows: &mut [ComparisonRow]) {
    rows.sort_by(|a, b| {
        b.metrics
            .recall
            .total_cmp(&a.metrics.recall)
            .then(b.metrics.roc_auc.total_cmp(&a.metrics.roc_auc))
    });
}

/// Scores every spec on an already prepared partition.
pub fn compare_prepared(
    prepared: &PreparedPartition,
    specs: &[ModelSpec],
    seed: u64,
    threshold: f64,
) -> Result<ComparisonTable> {
    let mut rows = specs
        .par_iter()
        .map(|spec| {
            let s = model_seed(seed, spec);
            let model = train_model(spec, &prepared.x_train, &prepared.y_train, s)?;
            let scores = model.predict_proba(&prepared.x_test)?;
            Ok(ComparisonRow {
                model: spec.name.clone(),
                family: spec.family().as_str().to_string(),
                seed: s,
                metrics: MetricsReport::compute(&scores, &prepared.y_test, threshold)?,
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank_rows(&mut rows);
    Ok(ComparisonTable { rows })
}

pub fn compare_models(
    dataset: &TabularDataset,
    specs: &[ModelSpec],
    options: &HoldoutOptions,
) -> Result<ComparisonTable> {
    if specs.is_empty() {
        return Err(Error::Config(
            "compare needs at least one model spec".into(),
        ));
    }
    let split =
        preprocess::stratified_split(dataset.labels(), options.test_fraction, options.seed)?;
    let prepared = prepare_partition(
        dataset,
        &split.train,
        &split.test,
        options.correlation_threshold,
        options.seed,
        options.smote.as_ref(),
    )?;
    compare_prepared(&prepared, specs, options.seed, options.threshold)
}
