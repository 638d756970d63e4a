use serde::{Deserialize, Serialize};

use super::tree::Tree;
use crate::explain::OutputSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// Mean of leaf probabilities (random forest, single tree).
    AverageProbability,
    /// `sigmoid(2 * sum(alpha_t * h_t(x)))` with `h_t` in {-1, +1} (AdaBoost).
    WeightedVote,
    /// `sigmoid(base_score + sum(w_t * leaf_t(x)))` (gradient boosting).
    AdditiveLogit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    /// Forest: 1. AdaBoost: alpha_t. Boosting: the learning rate.
    pub tree_weights: Vec<f64>,
    pub combination: Combination,
    pub base_score: f64,
}

impl TreeEnsemble {
    /// Additive contribution of each tree to [`TreeEnsemble::margin`].
    pub fn margin_scale(&self, t: usize) -> f64 {
        match self.combination {
            Combination::AverageProbability => self.tree_weights[t] / self.total_weight(),
            Combination::WeightedVote => 2.0 * self.tree_weights[t],
            Combination::AdditiveLogit => self.tree_weights[t],
        }
    }

    fn total_weight(&self) -> f64 {
        self.tree_weights.iter().sum()
    }

    /// Output in the ensemble's additive space: probability for averaging
    /// ensembles, log-odds otherwise.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let base = match self.combination {
            Combination::AdditiveLogit => self.base_score,
            _ => 0.0,
        };
        self.trees.iter().enumerate().fold(base, |acc, (t, tree)| {
            acc + self.margin_scale(t) * tree.predict_row(x)
        })
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let m = self.margin(x);
        match self.combination {
            Combination::AverageProbability => m,
            _ => sigmoid(m),
        }
    }

    pub fn output_space(&self) -> OutputSpace {
        match self.combination {
            Combination::AverageProbability => OutputSpace::Probability,
            _ => OutputSpace::Logit,
        }
    }

    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.trees.iter().flat_map(Tree::split_features).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_of_constants() {
        let e = TreeEnsemble {
            trees: vec![Tree::leaf(0.3); 4],
            tree_weights: vec![1.0; 4],
            combination: Combination::AverageProbability,
            base_score: 0.0,
        };
        assert!((e.predict_row(&[1.0, 2.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
