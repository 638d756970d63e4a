//! Two-class SAMME boosting of depth-1 stumps.

use serde::{Deserialize, Serialize};

use super::ensemble::{Combination, TreeEnsemble};
use super::tree::{train_tree, FeatureSubsample, TreeParams, TreeTargets};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

/// Weighted error floor used to keep alpha finite when a stump is perfect.
pub const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaBoostParams {
    #[serde(default = "AdaBoostParams::default_rounds")]
    pub n_rounds: usize,
}

impl AdaBoostParams {
    fn default_rounds() -> usize {
        100
    }
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_rounds: Self::default_rounds(),
        }
    }
}

/// `alpha = 0.5 * ln((1 - eps) / eps)`.
pub fn stump_weight(weighted_error: f64) -> f64 {
    let e = weighted_error.max(MIN_ERROR);
    0.5 * ((1.0 - e) / e).ln()
}

/// Stumps are stored with leaves mapped to {-1, +1}; `tree_weights` holds
/// alpha. Training stops early once a stump's weighted error reaches 0.5
/// (that stump is discarded) or 0 (that stump is kept).
pub fn train_adaboost(
    x: &Matrix,
    y: &[u8],
    params: &AdaBoostParams,
    seed: u64,
) -> Result<TreeEnsemble> {
    if y.is_empty() || y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    let n = y.len();
    let signs: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let mut w = vec![1.0 / n as f64; n];
    let stump = TreeParams {
        max_depth: 1,
        min_samples_leaf: 1,
        feature_subsample: FeatureSubsample::All,
    };
    // stumps use every feature, so the stream is never consumed
    let mut rng = rng_from_seed(seed);
    let mut trees = Vec::new();
    let mut alphas = Vec::new();
    for _ in 0..params.n_rounds {
        let mut tree = train_tree(
            x,
            TreeTargets::Labels {
                labels: y,
                weights: Some(&w),
            },
            &stump,
            &mut rng,
        )?;
        tree.map_leaves(|p| if p > 0.5 { 1.0 } else { -1.0 });
        let h: Vec<f64> = x.rows().map(|r| tree.predict_row(r)).collect();
        let err: f64 = (0..n).filter(|&i| h[i] != signs[i]).map(|i| w[i]).sum();
        if err >= 0.5 {
            break;
        }
        let alpha = stump_weight(err);
        trees.push(tree);
        alphas.push(alpha);
        if err <= 0.0 {
            break;
        }
        for i in 0..n {
            w[i] *= (-alpha * signs[i] * h[i]).exp();
        }
        let total: f64 = w.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NonFinite("adaboost sample weights".into()));
        }
        for wi in &mut w {
            *wi /= total;
        }
    }
    Ok(TreeEnsemble {
        trees,
        tree_weights: alphas,
        combination: Combination::WeightedVote,
        base_score: 0.0,
    })
}
