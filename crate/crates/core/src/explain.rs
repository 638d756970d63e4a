//! Interventional Shapley attributions.
//!
//! The value of a coalition `S` for an explained row `x` is the model output
//! averaged over background rows `b`, with features in `S` taken from `x` and
//! the rest from `b`. Three estimators share that game: brute-force subset
//! enumeration (small feature counts), an exact recursive algorithm for tree
//! ensembles, and permutation sampling for wide linear models.

use std::io::Write;

use rand::seq::{index::sample, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{Model, Node, Predictor, TreeEnsemble};
use crate::seed::rng_from_seed;

pub const MAX_EXACT_FEATURES: usize = 12;
pub const DEFAULT_BACKGROUND_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    Probability,
    Logit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// Expected output over the background set.
    pub base_value: f64,
    pub attributions: Vec<f64>,
    pub model_output: f64,
    pub output_space: OutputSpace,
    /// Monte-Carlo standard errors, present for sampled estimates only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_errors: Option<Vec<f64>>,
}

impl ShapExplanation {
    /// `base_value + sum(attributions) - model_output`.
    pub fn additivity_gap(&self) -> f64 {
        self.base_value + self.attributions.iter().sum::<f64>() - self.model_output
    }

    /// `model_output` mapped to a probability for readability.
    pub fn output_probability(&self) -> f64 {
        match self.output_space {
            OutputSpace::Probability => self.model_output,
            OutputSpace::Logit => crate::models::sigmoid(self.model_output),
        }
    }
}

fn check_background(x: &[f64], background: &Matrix) -> Result<()> {
    if background.n_rows() == 0 {
        return Err(Error::EmptyBackground);
    }
    if background.n_cols() != x.len() {
        return Err(Error::SchemaMismatch(format!(
            "row has {} features, background has {}",
            x.len(),
            background.n_cols()
        )));
    }
    Ok(())
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Mean of `f` over background rows with the features in `mask` taken from `x`.
fn coalition_value<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    background: &Matrix,
    mask: u32,
    buf: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for b in background.rows() {
        for j in 0..x.len() {
            buf[j] = if mask >> j & 1 == 1 { x[j] } else { b[j] };
        }
        total += f(buf);
    }
    total / background.n_rows() as f64
}

/// Brute-force Shapley values over all `2^M` coalitions.
pub fn exact_shapley<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    background: &Matrix,
    max_features: usize,
    output_space: OutputSpace,
) -> Result<ShapExplanation> {
    let m = x.len();
    if m > max_features || m >= 32 {
        return Err(Error::TooManyFeatures {
            max: max_features,
            found: m,
        });
    }
    check_background(x, background)?;
    let mut buf = vec![0.0; m];
    let values: Vec<f64> = (0..1u32 << m)
        .map(|mask| coalition_value(&f, x, background, mask, &mut buf))
        .collect();
    let fact = factorials(m);
    let mut phi = vec![0.0; m];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1u32 << j;
        for mask in 0..1u32 << m {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact[s] * fact[m - s - 1] / fact[m];
            *p += w * (values[(mask | bit) as usize] - values[mask as usize]);
        }
    }
    Ok(ShapExplanation {
        base_value: values[0],
        attributions: phi,
        model_output: f(x),
        output_space,
        std_errors: None,
    })
}

/// Permutation-sampling estimate with per-feature standard errors. Each
/// permutation's contributions telescope to `f(x) - base`, so local accuracy
/// holds exactly.
pub fn sampled_shapley<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    background: &Matrix,
    n_permutations: usize,
    seed: u64,
    output_space: OutputSpace,
) -> Result<ShapExplanation> {
    check_background(x, background)?;
    let m = x.len();
    let n_bg = background.n_rows() as f64;
    let base: f64 = background.rows().map(&f).sum::<f64>() / n_bg;
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let n_perm = n_permutations.max(2);
    for _ in 0..n_perm {
        order.shuffle(&mut rng);
        let mut hybrid: Vec<Vec<f64>> = background.rows().map(<[f64]>::to_vec).collect();
        let mut prev = base;
        for &j in &order {
            for row in &mut hybrid {
                row[j] = x[j];
            }
            let v = hybrid.iter().map(|r| f(r)).sum::<f64>() / n_bg;
            let delta = v - prev;
            sum[j] += delta;
            sum_sq[j] += delta * delta;
            prev = v;
        }
    }
    let p = n_perm as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / p).collect();
    let se = sum_sq
        .iter()
        .zip(&phi)
        .map(|(sq, mu)| ((sq / p - mu * mu).max(0.0) / (p - 1.0)).sqrt())
        .collect();
    Ok(ShapExplanation {
        base_value: base,
        attributions: phi,
        model_output: f(x),
        output_space,
        std_errors: Some(se),
    })
}

struct PathState<'a> {
    x: &'a [f64],
    b: &'a [f64],
    /// 0 unassigned, 1 taken from x, 2 taken from b
    owner: Vec<u8>,
    from_x: Vec<usize>,
    from_b: Vec<usize>,
    fact: &'a [f64],
}

fn tree_walk(nodes: &[Node], idx: usize, st: &mut PathState<'_>, scale: f64, phi: &mut [f64]) {
    match nodes[idx] {
        Node::Leaf { value } => {
            let (nx, nb) = (st.from_x.len(), st.from_b.len());
            if nx + nb == 0 {
                return;
            }
            let v = scale * value;
            if nx > 0 {
                let w = st.fact[nx - 1] * st.fact[nb] / st.fact[nx + nb];
                for &j in &st.from_x {
                    phi[j] += w * v;
                }
            }
            if nb > 0 {
                let w = st.fact[nx] * st.fact[nb - 1] / st.fact[nx + nb];
                for &j in &st.from_b {
                    phi[j] -= w * v;
                }
            }
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let x_child = if st.x[feature] <= threshold {
                left
            } else {
                right
            };
            let b_child = if st.b[feature] <= threshold {
                left
            } else {
                right
            };
            match st.owner[feature] {
                1 => tree_walk(nodes, x_child, st, scale, phi),
                2 => tree_walk(nodes, b_child, st, scale, phi),
                _ if x_child == b_child => tree_walk(nodes, x_child, st, scale, phi),
                _ => {
                    st.owner[feature] = 1;
                    st.from_x.push(feature);
                    tree_walk(nodes, x_child, st, scale, phi);
                    st.from_x.pop();
                    st.owner[feature] = 2;
                    st.from_b.push(feature);
                    tree_walk(nodes, b_child, st, scale, phi);
                    st.from_b.pop();
                    st.owner[feature] = 0;
                }
            }
        }
    }
}

/// Exact interventional Shapley values of the ensemble's additive margin.
///
/// For one tree and one background row, only features on which `x` and `b`
/// route differently matter. Each root-to-leaf path reachable by mixing the
/// two rows fixes a set of features taken from `x` (size `p`) and from `b`
/// (size `q`); the leaf value is credited to the first group with weight
/// `(p-1)! q! / (p+q)!` and debited from the second with `p! (q-1)! / (p+q)!`.
pub fn tree_shap(
    ensemble: &TreeEnsemble,
    x: &[f64],
    background: &Matrix,
) -> Result<ShapExplanation> {
    check_background(x, background)?;
    let d = x.len();
    let fact = factorials(d + 1);
    let mut phi = vec![0.0; d];
    for b in background.rows() {
        let mut st = PathState {
            x,
            b,
            owner: vec![0; d],
            from_x: Vec::new(),
            from_b: Vec::new(),
            fact: &fact,
        };
        for (t, tree) in ensemble.trees.iter().enumerate() {
            tree_walk(&tree.nodes, 0, &mut st, ensemble.margin_scale(t), &mut phi);
        }
    }
    let n_bg = background.n_rows() as f64;
    phi.iter_mut().for_each(|p| *p /= n_bg);
    let base_value = background.rows().map(|b| ensemble.margin(b)).sum::<f64>() / n_bg;
    Ok(ShapExplanation {
        base_value,
        attributions: phi,
        model_output: ensemble.margin(x),
        output_space: ensemble.output_space(),
        std_errors: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub max_exact_features: usize,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            max_exact_features: MAX_EXACT_FEATURES,
            n_permutations: 200,
            seed: 0,
        }
    }
}

/// Tree ensembles use [`tree_shap`]; linear models use [`exact_shapley`]
/// when narrow enough and [`sampled_shapley`] otherwise.
pub fn explain_model(
    model: &Model,
    x: &[f64],
    background: &Matrix,
    options: &ExplainOptions,
) -> Result<ShapExplanation> {
    if x.len() != model.n_features {
        return Err(Error::SchemaMismatch(format!(
            "model expects {} features, row has {}",
            model.n_features,
            x.len()
        )));
    }
    match &model.predictor {
        Predictor::Ensemble(e) => tree_shap(e, x, background),
        Predictor::Linear(_) if x.len() <= options.max_exact_features => exact_shapley(
            |r| model.margin(r),
            x,
            background,
            options.max_exact_features,
            OutputSpace::Logit,
        ),
        Predictor::Linear(_) => sampled_shapley(
            |r| model.margin(r),
            x,
            background,
            options.n_permutations,
            options.seed,
            OutputSpace::Logit,
        ),
    }
}

pub fn explain_rows(
    model: &Model,
    rows: &Matrix,
    background: &Matrix,
    options: &ExplainOptions,
) -> Result<Vec<ShapExplanation>> {
    (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let opts = ExplainOptions {
                seed: crate::seed::derive_seed(options.seed, "explain-row", i as u64),
                ..*options
            };
            explain_model(model, rows.row(i), background, &opts)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub index: usize,
    pub mean_abs_attribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub n_rows: usize,
    /// Descending by mean |attribution|; ties keep feature order.
    pub ranking: Vec<FeatureImportance>,
}

impl GlobalImportance {
    pub fn from_explanations(
        explanations: &[ShapExplanation],
        feature_names: &[String],
    ) -> Result<Self> {
        if explanations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = feature_names.len();
        let mut mean = vec![0.0; d];
        for e in explanations {
            if e.attributions.len() != d {
                return Err(Error::LengthMismatch {
                    left: e.attributions.len(),
                    right: d,
                });
            }
            for (m, a) in mean.iter_mut().zip(&e.attributions) {
                *m += a.abs();
            }
        }
        let n = explanations.len() as f64;
        let mut ranking: Vec<FeatureImportance> = mean
            .into_iter()
            .enumerate()
            .map(|(index, total)| FeatureImportance {
                feature: feature_names[index].clone(),
                index,
                mean_abs_attribution: total / n,
            })
            .collect();
        ranking.sort_by(|a, b| b.mean_abs_attribution.total_cmp(&a.mean_abs_attribution));
        Ok(GlobalImportance {
            n_rows: explanations.len(),
            ranking,
        })
    }

    /// Importance indexed by feature position.
    pub fn by_feature(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.ranking.len()];
        for r in &self.ranking {
            v[r.index] = r.mean_abs_attribution;
        }
        v
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "feature", "mean_abs_shap"])?;
        for (i, r) in self.ranking.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                r.feature.clone(),
                r.mean_abs_attribution.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn global_importance(
    model: &Model,
    rows: &Matrix,
    background: &Matrix,
    feature_names: &[String],
    options: &ExplainOptions,
) -> Result<GlobalImportance> {
    if rows.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let expl = explain_rows(model, rows, background, options)?;
    GlobalImportance::from_explanations(&expl, feature_names)
}

/// Per-row CSV: `row_id,base_value,model_output,<one column per feature>`.
pub fn write_explanations_csv<W: Write>(
    writer: W,
    row_ids: &[usize],
    explanations: &[ShapExplanation],
    feature_names: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "row_id".to_string(),
        "base_value".into(),
        "model_output".into(),
    ];
    header.extend(feature_names.iter().cloned());
    w.write_record(&header)?;
    for (id, e) in row_ids.iter().zip(explanations) {
        let mut rec = vec![
            id.to_string(),
            e.base_value.to_string(),
            e.model_output.to_string(),
        ];
        rec.extend(e.attributions.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded sample of up to `n` rows without replacement, kept in row order.
pub fn sample_background(x: &Matrix, n: usize, seed: u64) -> Matrix {
    if x.n_rows() <= n {
        return x.clone();
    }
    x.select_rows(&sample_indices(x.n_rows(), n, seed))
}

/// Sorted indices of the rows [`sample_background`] keeps.
pub fn sample_indices(n_rows: usize, n: usize, seed: u64) -> Vec<usize> {
    if n_rows <= n {
        return (0..n_rows).collect();
    }
    let mut idx = sample(&mut rng_from_seed(seed), n_rows, n).into_vec();
    idx.sort_unstable();
    idx
}
