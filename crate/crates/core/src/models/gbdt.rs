//! Gradient-boosted trees on the logistic loss with Newton leaf weights.
//!
//! The three presets only change default hyperparameters:
//!
//! | preset   | n_trees | learning_rate | max_depth | reg_lambda | min_child_weight |
//! |----------|---------|---------------|-----------|------------|------------------|
//! | xgboost  | 200     | 0.1           | 6         | 1.0        | 1.0              |
//! | catboost | 250     | 0.08          | 6         | 3.0        | 1.0              |
//! | lightgbm | 200     | 0.1           | 8         | 0.0        | 0.001            |

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::ensemble::{sigmoid, Combination, TreeEnsemble};
use super::logistic::softplus;
use super::tree::{train_tree_on, FeatureSubsample, TreeParams, TreeTargets};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Xgboost,
    Catboost,
    Lightgbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    pub preset: Preset,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    /// Row fraction drawn without replacement per round.
    pub subsample: f64,
    pub min_samples_leaf: usize,
}

impl GbdtParams {
    pub fn preset(preset: Preset) -> Self {
        let base = GbdtParams {
            preset,
            n_trees: 200,
            learning_rate: 0.1,
            max_depth: 6,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            min_samples_leaf: 1,
        };
        match preset {
            Preset::Xgboost => base,
            Preset::Catboost => GbdtParams {
                n_trees: 250,
                learning_rate: 0.08,
                reg_lambda: 3.0,
                ..base
            },
            Preset::Lightgbm => GbdtParams {
                max_depth: 8,
                reg_lambda: 0.0,
                min_child_weight: 1e-3,
                ..base
            },
        }
    }
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self::preset(Preset::Xgboost)
    }
}

/// Mean logistic loss of margins against labels.
pub fn log_loss(margins: &[f64], y: &[u8]) -> f64 {
    margins
        .iter()
        .zip(y)
        .map(|(&z, &yi)| softplus(z) - f64::from(yi) * z)
        .sum::<f64>()
        / margins.len() as f64
}

pub fn train_gbdt(x: &Matrix, y: &[u8], params: &GbdtParams, seed: u64) -> Result<TreeEnsemble> {
    train_gbdt_with_history(x, y, params, seed).map(|(e, _)| e)
}

/// Also returns the training log-loss before the first round and after each
/// round (`n_trees + 1` entries).
pub fn train_gbdt_with_history(
    x: &Matrix,
    y: &[u8],
    params: &GbdtParams,
    seed: u64,
) -> Result<(TreeEnsemble, Vec<f64>)> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.n_rows(),
        });
    }
    if y.is_empty() || y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::Config(format!(
            "subsample must lie in (0, 1], got {}",
            params.subsample
        )));
    }
    let n = y.len();
    let p = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    let base_score = (p / (1.0 - p)).ln();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample: FeatureSubsample::All,
    };
    let mut margins = vec![base_score; n];
    let mut history = vec![log_loss(&margins, y)];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let all_rows: Vec<usize> = (0..n).collect();
    for t in 0..params.n_trees {
        for i in 0..n {
            let pi = sigmoid(margins[i]);
            grad[i] = pi - f64::from(y[i]);
            hess[i] = pi * (1.0 - pi);
        }
        let mut rng = derived_rng(seed, "gbdt", t as u64);
        let rows = if params.subsample < 1.0 {
            let m = ((params.subsample * n as f64).round() as usize)
                .max(2 * params.min_samples_leaf.max(1));
            let mut r = sample(&mut rng, n, m.min(n)).into_vec();
            r.sort_unstable();
            r
        } else {
            all_rows.clone()
        };
        let tree = train_tree_on(
            x,
            &rows,
            TreeTargets::Gradients {
                grad: &grad,
                hess: &hess,
                reg_lambda: params.reg_lambda,
                min_child_weight: params.min_child_weight,
            },
            &tree_params,
            &mut rng,
        )?;
        for (i, row) in x.rows().enumerate() {
            margins[i] += params.learning_rate * tree.predict_row(row);
            if !margins[i].is_finite() {
                return Err(Error::NonFinite(format!("boosting score at round {t}")));
            }
        }
        history.push(log_loss(&margins, y));
        trees.push(tree);
    }
    Ok((
        TreeEnsemble {
            tree_weights: vec![params.learning_rate; trees.len()],
            trees,
            combination: Combination::AdditiveLogit,
            base_score,
        },
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_score_is_log_odds() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        let params = GbdtParams {
            n_trees: 0,
            ..GbdtParams::default()
        };
        let e = train_gbdt(&x, &[0, 0, 0, 1], &params, 0).unwrap();
        assert!((e.base_score - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((e.base_score + 1.0986122886681098).abs() < 1e-12);
        for row in x.rows() {
            assert!((e.predict_row(row) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn presets_differ_only_in_defaults() {
        assert_eq!(GbdtParams::preset(Preset::Catboost).reg_lambda, 3.0);
        assert_eq!(GbdtParams::preset(Preset::Lightgbm).max_depth, 8);
        assert_eq!(GbdtParams::default().n_trees, 200);
    }

    #[test]
    fn loss_decreases_on_easy_data() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [i as f64, (i % 3) as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i > 25 || i % 7 == 0)).collect();
        let params = GbdtParams {
            n_trees: 30,
            max_depth: 3,
            ..GbdtParams::default()
        };
        let (_, h) = train_gbdt_with_history(&x, &y, &params, 1).unwrap();
        assert_eq!(h.len(), 31);
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(h[30] < h[0]);
    }
}
