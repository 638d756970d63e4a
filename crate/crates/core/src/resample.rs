//! SMOTE oversampling of the positive (label 1) class.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteConfig {
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after resampling.
    #[serde(default = "default_ratio")]
    pub target_ratio: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    5
}

fn default_ratio() -> f64 {
    1.0
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: default_k(),
            target_ratio: default_ratio(),
            seed: 0,
        }
    }
}

/// Provenance of one synthetic row: `x_parent + lambda * (x_neighbor - x_parent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecord {
    pub parent_index: usize,
    pub neighbor_index: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Original rows first, synthetic rows appended.
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub audit: Vec<SyntheticRecord>,
    pub minority_before: usize,
    pub majority_count: usize,
}

impl SmoteOutput {
    pub fn n_synthetic(&self) -> usize {
        self.audit.len()
    }

    /// CSV of `parent_index,neighbor_index,lambda`; indices are rows of the
    /// input training matrix.
    pub fn write_audit<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parent_index", "neighbor_index", "lambda"])?;
        for r in &self.audit {
            w.write_record([
                r.parent_index.to_string(),
                r.neighbor_index.to_string(),
                r.lambda.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_audit<R: std::io::Read>(reader: R) -> Result<Vec<SyntheticRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Config("short audit record".into()))
        };
        let bad = |_| Error::Config("malformed audit record".into());
        out.push(SyntheticRecord {
            parent_index: parse(0)?
                .parse()
                .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            neighbor_index: parse(1)?
                .parse()
                .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            lambda: parse(2)?
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        });
    }
    Ok(out)
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For every positive row (in row order), the `k` nearest other positive rows
/// by Euclidean distance. Entries are row indices into `features`; ties go to
/// the lower index.
pub fn minority_knn(features: &Matrix, labels: &[u8], k: usize) -> Result<Vec<Vec<usize>>> {
    if labels.len() != features.n_rows() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: features.n_rows(),
        });
    }
    let minority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    if k == 0 || minority.len() <= k {
        return Err(Error::TooFewMinority {
            minority: minority.len(),
            required: k,
        });
    }
    Ok(minority
        .par_iter()
        .map(|&i| {
            let xi = features.row(i);
            let mut cands: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (squared_distance(xi, features.row(j)), j))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cands.select_nth_unstable_by(k - 1, cmp);
            cands.truncate(k);
            cands.sort_by(cmp);
            cands.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Number of synthetic rows needed to reach `ceil(target_ratio * majority)`.
pub fn synthetic_count(minority: usize, majority: usize, target_ratio: f64) -> usize {
    ((target_ratio * majority as f64).ceil() as usize).saturating_sub(minority)
}

/// Interpolates synthetic positives. Parents cycle through positive rows in
/// index order; each draw picks one of the parent's `k` neighbours uniformly
/// and `lambda ~ U[0, 1)`.
pub fn smote(features: &Matrix, labels: &[u8], config: &SmoteConfig) -> Result<SmoteOutput> {
    let minority_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let n_min = minority_rows.len();
    let n_maj = labels.len() - n_min;
    if n_maj == 0 {
        return Err(Error::SingleClass);
    }
    let current = n_min as f64 / n_maj as f64;
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) || config.target_ratio < current {
        return Err(Error::RatioBelowCurrent {
            target: config.target_ratio,
            current,
        });
    }
    let neighbors = minority_knn(features, labels, config.k_neighbors)?;
    let n_syn = synthetic_count(n_min, n_maj, config.target_ratio);

    let d = features.n_cols();
    let mut rng = rng_from_seed(config.seed);
    let mut data = Vec::with_capacity((labels.len() + n_syn) * d);
    data.extend_from_slice(features.as_slice());
    let mut audit = Vec::with_capacity(n_syn);
    for s in 0..n_syn {
        let slot = s % n_min;
        let parent = minority_rows[slot];
        let neighbor = neighbors[slot][rng.gen_range(0..config.k_neighbors)];
        let lambda: f64 = rng.gen();
        data.extend(interpolate(
            features.row(parent),
            features.row(neighbor),
            lambda,
        ));
        audit.push(SyntheticRecord {
            parent_index: parent,
            neighbor_index: neighbor,
            lambda,
        });
    }
    let mut out_labels = labels.to_vec();
    out_labels.resize(labels.len() + n_syn, 1);
    Ok(SmoteOutput {
        features: Matrix::new(labels.len() + n_syn, d, data)?,
        labels: out_labels,
        audit,
        minority_before: n_min,
        majority_count: n_maj,
    })
}

/// `x_i + lambda * (x_nn - x_i)`, coordinate-wise.
pub fn interpolate<'a>(
    xi: &'a [f64],
    xnn: &'a [f64],
    lambda: f64,
) -> impl Iterator<Item = f64> + 'a {
    xi.iter().zip(xnn).map(move |(&a, &b)| a + lambda * (b - a))
}
