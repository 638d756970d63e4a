//! CSV ingestion with explicit missing-value handling.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Feature matrix with named columns, optional missing cells and binary labels.
///
/// Label `1` is the positive (bankrupt, minority) class throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    feature_names: Vec<String>,
    cells: Vec<Option<f64>>,
    labels: Vec<u8>,
}

impl TabularDataset {
    pub fn new(
        feature_names: Vec<String>,
        cells: Vec<Option<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n_cols = feature_names.len();
        if cells.len() != labels.len() * n_cols {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: labels.len() * n_cols,
            });
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::LabelOutOfRange {
                row,
                value: labels[row].to_string(),
            });
        }
        if let Some(pos) = cells
            .iter()
            .position(|c| matches!(c, Some(v) if !v.is_finite()))
        {
            return Err(Error::NonFinite(format!(
                "cell ({}, {})",
                pos / n_cols.max(1),
                feature_names[pos % n_cols.max(1)]
            )));
        }
        Ok(TabularDataset {
            feature_names,
            cells,
            labels,
        })
    }

    pub fn from_matrix(
        feature_names: Vec<String>,
        matrix: &Matrix,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if matrix.n_cols() != feature_names.len() || matrix.n_rows() != labels.len() {
            return Err(Error::SchemaMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.n_rows(),
                matrix.n_cols(),
                labels.len(),
                feature_names.len()
            )));
        }
        Self::new(
            feature_names,
            matrix.as_slice().iter().map(|&v| Some(v)).collect(),
            labels,
        )
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.n_features() + col]
    }

    pub fn row_cells(&self, row: usize) -> &[Option<f64>] {
        let d = self.n_features();
        &self.cells[row * d..(row + 1) * d]
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Dense copy of the features; fails if any cell is missing.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let data = self
            .cells
            .iter()
            .map(|c| c.ok_or(Error::MissingCells))
            .collect::<Result<Vec<_>>>()?;
        Matrix::new(self.n_rows(), self.n_features(), data)
    }

    pub fn subset(&self, rows: &[usize]) -> TabularDataset {
        let mut cells = Vec::with_capacity(rows.len() * self.n_features());
        for &r in rows {
            cells.extend_from_slice(self.row_cells(r));
        }
        TabularDataset {
            feature_names: self.feature_names.clone(),
            cells,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Writes the dataset as CSV with the label as the last column. Missing
    /// cells become empty fields; reals use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_rows() {
            record.clear();
            record.extend(
                self.row_cells(i)
                    .iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default()),
            );
            record.push(self.labels[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        self.write_csv(File::create(path)?, label_column)
    }
}

/// Parsing knobs; the defaults accept `""`, `NA` and `NaN` as missing.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Compared case-insensitively after trimming.
    pub missing_tokens: Vec<String>,
    pub true_aliases: Vec<String>,
    pub false_aliases: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            missing_tokens: vec![String::new(), "NA".into(), "NaN".into()],
            true_aliases: vec!["true".into()],
            false_aliases: vec!["false".into()],
        }
    }
}

impl LoadOptions {
    fn is_missing(&self, cell: &str) -> bool {
        self.missing_tokens
            .iter()
            .any(|t| t.eq_ignore_ascii_case(cell))
    }

    fn parse_label(&self, cell: &str) -> Option<u8> {
        match cell {
            "0" => Some(0),
            "1" => Some(1),
            _ if self
                .true_aliases
                .iter()
                .any(|a| a.eq_ignore_ascii_case(cell)) =>
            {
                Some(1)
            }
            _ if self
                .false_aliases
                .iter()
                .any(|a| a.eq_ignore_ascii_case(cell)) =>
            {
                Some(0)
            }
            _ => None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<TabularDataset> {
    load_csv_with(path, label_column, &LoadOptions::default())
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    label_column: &str,
    options: &LoadOptions,
) -> Result<TabularDataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    read_csv(File::open(path)?, label_column, options)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    label_column: &str,
    options: &LoadOptions,
) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut cells = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        for (col, raw) in record.iter().enumerate() {
            let cell = raw.trim();
            if col == label_idx {
                let label = options
                    .parse_label(cell)
                    .ok_or_else(|| Error::LabelOutOfRange {
                        row,
                        value: cell.to_string(),
                    })?;
                labels.push(label);
            } else if options.is_missing(cell) {
                cells.push(None);
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => cells.push(Some(v)),
                    _ => {
                        return Err(Error::UnparseableCell {
                            row,
                            column: header[col].clone(),
                            value: cell.to_string(),
                        })
                    }
                }
            }
        }
    }
    TabularDataset::new(feature_names, cells, labels)
}

/// Class balance and missingness counts for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub n_features: usize,
    /// Label value with fewer rows; ties go to 1.
    pub minority_label: u8,
    pub minority_count: usize,
    pub minority_fraction: f64,
    pub missing_cell_count: usize,
}

pub fn summarize(dataset: &TabularDataset) -> Result<DatasetSummary> {
    let n = dataset.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let positives = dataset.labels().iter().filter(|&&l| l == 1).count();
    let negatives = n - positives;
    let (minority_label, minority_count) = if positives <= negatives {
        (1, positives)
    } else {
        (0, negatives)
    };
    Ok(DatasetSummary {
        n_rows: n,
        n_features: dataset.n_features(),
        minority_label,
        minority_count,
        minority_fraction: minority_count as f64 / n as f64,
        missing_cell_count: dataset.missing_count(),
    })
}
