//! Train-fitted preprocessing: median imputation, correlation filtering,
//! standardization and stratified partitioning.
//!
//! Fitting order is impute, then filter, then standardize. Every statistic is
//! computed from the rows handed to [`fit`] and nothing else, so applying the
//! artifacts to a held-out partition cannot leak information into training.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TabularDataset;
use crate::matrix::Matrix;
use crate::seed::derived_rng;

pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffled split. Each class contributes
/// `round(test_fraction * class_count)` rows to the test side; both index
/// lists are returned sorted.
pub fn stratified_split(labels: &[u8], test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        if n_test == 0 || n_test >= members.len() {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut derived_rng(seed, "split", u64::from(class)));
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Statistics learned on the training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifacts {
    pub schema_version: u32,
    /// Original (pre-filter) column names, in CSV order.
    pub feature_names: Vec<String>,
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    /// Population convention (divide by n). Zero only for constant columns.
    pub stddevs: Vec<f64>,
    pub constant_columns: Vec<bool>,
    pub retained_columns: Vec<bool>,
    pub correlation_threshold: f64,
    pub split_seed: u64,
}

impl FitArtifacts {
    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.retained_columns.len())
            .filter(|&j| self.retained_columns[j])
            .collect()
    }

    pub fn retained_names(&self) -> Vec<String> {
        self.retained_indices()
            .into_iter()
            .map(|j| self.feature_names[j].clone())
            .collect()
    }

    pub fn dropped_names(&self) -> Vec<String> {
        (0..self.retained_columns.len())
            .filter(|&j| !self.retained_columns[j])
            .map(|j| self.feature_names[j].clone())
            .collect()
    }

    /// Imputed, filtered and standardized dense features.
    pub fn transform_matrix(&self, dataset: &TabularDataset) -> Result<Matrix> {
        if dataset.feature_names() != self.feature_names.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "dataset has columns {:?}, artifacts expect {:?}",
                dataset.feature_names(),
                self.feature_names
            )));
        }
        let keep = self.retained_indices();
        let mut data = Vec::with_capacity(dataset.n_rows() * keep.len());
        for i in 0..dataset.n_rows() {
            let cells = dataset.row_cells(i);
            for &j in &keep {
                let v = cells[j].unwrap_or(self.medians[j]);
                data.push((v - self.means[j]) / self.stddevs[j]);
            }
        }
        Matrix::new(dataset.n_rows(), keep.len(), data)
    }

    pub fn sha256(&self) -> String {
        crate::seed::sha256_hex(&serde_json::to_vec(self).expect("artifacts serialize"))
    }
}

/// Imputed, retained-and-standardized copy of `dataset`; labels untouched.
pub fn apply_transform(
    dataset: &TabularDataset,
    artifacts: &FitArtifacts,
) -> Result<TabularDataset> {
    let m = artifacts.transform_matrix(dataset)?;
    TabularDataset::from_matrix(artifacts.retained_names(), &m, dataset.labels().to_vec())
}

/// Median of the non-missing values; the mean of the middle pair for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Fits imputation and scaling on `train`. Only constant columns are
/// excluded from `retained_columns`; see [`fit`] for the filtered variant.
pub fn fit_impute_scale(train: &TabularDataset) -> Result<FitArtifacts> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = train.n_rows();
    let d = train.n_features();
    let mut medians = Vec::with_capacity(d);
    let mut means = Vec::with_capacity(d);
    let mut stddevs = Vec::with_capacity(d);
    let mut constant = Vec::with_capacity(d);
    for j in 0..d {
        let mut present: Vec<f64> = (0..n).filter_map(|i| train.cell(i, j)).collect();
        let med = median(&mut present)
            .ok_or_else(|| Error::AllMissingColumn(train.feature_names()[j].clone()))?;
        let column: Vec<f64> = (0..n).map(|i| train.cell(i, j).unwrap_or(med)).collect();
        let mean = column.iter().sum::<f64>() / n as f64;
        let is_constant = column.iter().all(|&v| v == column[0]);
        let std = if is_constant {
            0.0
        } else {
            (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
        };
        medians.push(med);
        means.push(mean);
        stddevs.push(std);
        constant.push(is_constant);
    }
    let retained: Vec<bool> = constant.iter().map(|c| !c).collect();
    if !retained.iter().any(|&r| r) {
        return Err(Error::NoFeaturesRetained);
    }
    Ok(FitArtifacts {
        schema_version: crate::SCHEMA_VERSION,
        feature_names: train.feature_names().to_vec(),
        medians,
        means,
        stddevs,
        constant_columns: constant,
        retained_columns: retained,
        correlation_threshold: 1.0,
        split_seed: 0,
    })
}

/// Full fit: impute, correlation-filter the imputed training columns, scale.
pub fn fit(
    train: &TabularDataset,
    correlation_threshold: f64,
    split_seed: u64,
) -> Result<FitArtifacts> {
    if !(correlation_threshold > 0.0 && correlation_threshold <= 1.0) {
        return Err(Error::Config(format!(
            "correlation threshold must lie in (0, 1], got {correlation_threshold}"
        )));
    }
    let mut artifacts = fit_impute_scale(train)?;
    let n = train.n_rows();
    let d = train.n_features();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            data.push(train.cell(i, j).unwrap_or(artifacts.medians[j]));
        }
    }
    let imputed = Matrix::new(n, d, data)?;
    artifacts.retained_columns = correlation_filter(&imputed, correlation_threshold);
    if !artifacts.retained_columns.iter().any(|&r| r) {
        return Err(Error::NoFeaturesRetained);
    }
    artifacts.correlation_threshold = correlation_threshold;
    artifacts.split_seed = split_seed;
    Ok(artifacts)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Greedy scan over column pairs `(i, j)`, `i < j`, in index order: when both
/// columns are still retained and `|r| > threshold`, column `j` is dropped.
/// Constant columns are always dropped.
pub fn correlation_filter(train: &Matrix, threshold: f64) -> Vec<bool> {
    let d = train.n_cols();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| train.column(j)).collect();
    let mut retained: Vec<bool> = columns
        .iter()
        .map(|c| c.iter().any(|&v| v != c[0]))
        .collect();
    for i in 0..d {
        if !retained[i] {
            continue;
        }
        for j in i + 1..d {
            if retained[j] && pearson(&columns[i], &columns[j]).abs() > threshold {
                retained[j] = false;
            }
        }
    }
    retained
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn dataset(columns: &[Vec<Option<f64>>], labels: Vec<u8>) -> TabularDataset {
        let n = labels.len();
        let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
        let mut cells = Vec::new();
        for i in 0..n {
            for c in columns {
                cells.push(c[i]);
            }
        }
        TabularDataset::new(names, cells, labels).unwrap()
    }

    #[test]
    fn split_rounding_per_class() {
        let labels: Vec<u8> = (0..1000).map(|i| u8::from(i < 18)).collect();
        let s = stratified_split(&labels, 0.2, 7).unwrap();
        let pos = s.test.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(pos, 4);
        assert_eq!(s.test.len() - pos, 196);
        assert_eq!(s.train.len() + s.test.len(), 1000);
    }

    #[test]
    fn split_half_of_four() {
        let labels = vec![0, 1, 0, 1];
        let s = stratified_split(&labels, 0.5, 1).unwrap();
        for part in [&s.train, &s.test] {
            assert_eq!(part.len(), 2);
            assert_eq!(part.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let labels: Vec<u8> = (0..300).map(|i| u8::from(i % 7 == 0)).collect();
        let a = stratified_split(&labels, 0.2, 99).unwrap();
        assert_eq!(a, stratified_split(&labels, 0.2, 99).unwrap());
        assert_ne!(a, stratified_split(&labels, 0.2, 100).unwrap());
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_tiny_class() {
        let labels = vec![0, 0, 0, 0, 1];
        assert!(matches!(
            stratified_split(&labels, 0.2, 0),
            Err(Error::ClassTooSmall { class: 1, .. })
        ));
    }

    #[test]
    fn median_of_two_present_values() {
        let ds = dataset(&[vec![Some(1.0), None, Some(3.0)]], vec![0, 1, 0]);
        let a = fit_impute_scale(&ds).unwrap();
        assert_eq!(a.medians[0], 2.0);
    }

    #[test]
    fn population_standardization() {
        let ds = dataset(&[vec![Some(1.0), Some(2.0), Some(3.0)]], vec![0, 1, 0]);
        let a = fit_impute_scale(&ds).unwrap();
        assert_eq!(a.means[0], 2.0);
        assert!((a.stddevs[0] - 0.816496580927726).abs() < 1e-12);
        let m = a.transform_matrix(&ds).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (i, e) in expected.iter().enumerate() {
            assert!((m.get(i, 0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_flagged_and_dropped() {
        let ds = dataset(
            &[
                vec![Some(5.0), Some(5.0), Some(5.0)],
                vec![Some(1.0), Some(2.0), Some(4.0)],
            ],
            vec![0, 1, 0],
        );
        let a = fit(&ds, 0.95, 0).unwrap();
        assert!(a.constant_columns[0]);
        assert_eq!(a.stddevs[0], 0.0);
        assert_eq!(a.retained_columns, vec![false, true]);
        assert_eq!(
            apply_transform(&ds, &a).unwrap().feature_names(),
            &["f1".to_string()]
        );
    }

    #[test]
    fn all_missing_column_named() {
        let ds = dataset(&[vec![Some(1.0), Some(2.0)], vec![None, None]], vec![0, 1]);
        match fit_impute_scale(&ds) {
            Err(Error::AllMissingColumn(name)) => assert_eq!(name, "f1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transform_standardizes_training_rows() {
        let mut rng = rng_from_seed(3);
        let cols: Vec<Vec<Option<f64>>> = (0..4)
            .map(|_| {
                (0..200)
                    .map(|_| {
                        if rng.gen_bool(0.05) {
                            None
                        } else {
                            Some(rng.gen_range(-10.0..50.0))
                        }
                    })
                    .collect()
            })
            .collect();
        let labels = (0..200).map(|i| u8::from(i % 9 == 0)).collect();
        let ds = dataset(&cols, labels);
        let a = fit(&ds, 0.95, 0).unwrap();
        let m = a.transform_matrix(&ds).unwrap();
        for j in 0..m.n_cols() {
            let c = m.column(j);
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64;
            assert!(mean.abs() < 1e-12, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn test_rows_use_train_median() {
        let train = dataset(&[vec![Some(1.0), Some(2.0), Some(10.0)]], vec![0, 1, 0]);
        let a = fit_impute_scale(&train).unwrap();
        let test = dataset(&[vec![None, Some(100.0), Some(200.0)]], vec![0, 1, 0]);
        let m = a.transform_matrix(&test).unwrap();
        let expected = (2.0 - a.means[0]) / a.stddevs[0];
        assert_eq!(m.get(0, 0), expected);
    }

    #[test]
    fn extra_column_is_schema_mismatch() {
        let train = dataset(&[vec![Some(1.0), Some(2.0)]], vec![0, 1]);
        let a = fit_impute_scale(&train).unwrap();
        let wider = dataset(
            &[vec![Some(1.0), Some(2.0)], vec![Some(1.0), Some(2.0)]],
            vec![0, 1],
        );
        assert!(matches!(
            apply_transform(&wider, &a),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn perfectly_correlated_later_column_dropped() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 + 1.0).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 2.0 * v]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        assert_eq!(correlation_filter(&m, 0.95), vec![true, false]);
    }

    #[test]
    fn independent_columns_survive() {
        let mut rng = rng_from_seed(11);
        let rows: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        assert_eq!(correlation_filter(&m, 0.95), vec![true, true]);
    }

    #[test]
    fn scan_order_on_correlated_triple() {
        // Column 0 is a shared factor; 1 and 2 add independent noise of equal
        // size, so r(0,1) = r(0,2) ~ 0.99 and r(1,2) ~ 0.98.
        let mut rng = rng_from_seed(5);
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let e1: f64 = rng.gen_range(-1.0..1.0);
                let e2: f64 = rng.gen_range(-1.0..1.0);
                vec![z, z + 0.142 * e1, z + 0.142 * e2]
            })
            .collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let r01 = pearson(&m.column(0), &m.column(1));
        let r02 = pearson(&m.column(0), &m.column(2));
        let r12 = pearson(&m.column(1), &m.column(2));
        assert!(
            (r01 - 0.99).abs() < 0.003 && (r02 - 0.99).abs() < 0.003,
            "{r01} {r02}"
        );
        assert!((r12 - 0.98).abs() < 0.005, "{r12}");
        assert_eq!(correlation_filter(&m, 0.95), vec![true, false, false]);
        // With threshold between r(1,2) and r(0,*), still only column 0 survives.
        assert_eq!(correlation_filter(&m, 0.985), vec![true, false, false]);
    }

    #[test]
    fn fit_reports_threshold_and_seed() {
        let ds = dataset(&[vec![Some(1.0), Some(2.0), Some(3.5)]], vec![0, 1, 0]);
        let a = fit(&ds, 0.9, 17).unwrap();
        assert_eq!(a.correlation_threshold, 0.9);
        assert_eq!(a.split_seed, 17);
        let json = serde_json::to_string(&a).unwrap();
        let back: FitArtifacts = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
