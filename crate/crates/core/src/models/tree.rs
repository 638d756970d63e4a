//! CART trees stored as node arrays, grown by exact greedy split search.
//!
//! One grower serves every tree-based family. In label mode it maximizes the
//! weighted Gini impurity reduction and leaves hold the weighted class-1
//! fraction. In gradient mode it maximizes the second-order (Newton) gain and
//! leaves hold `-G / (H + lambda)`.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::Rng;

/// Splits whose criterion improvement does not exceed this are not made.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// `x[feature] <= threshold` routes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Sorted, deduplicated features the tree splits on.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn map_leaves(&mut self, f: impl Fn(f64) -> f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value = f(*value);
            }
        }
    }

    /// Checks the structural invariants: children in range, each non-root
    /// node referenced exactly once, root never referenced.
    pub fn validate(&self) -> bool {
        let mut refs = vec![0usize; self.nodes.len()];
        for n in &self.nodes {
            if let Node::Split { left, right, .. } = *n {
                if left >= self.nodes.len() || right >= self.nodes.len() || left == right {
                    return false;
                }
                refs[left] += 1;
                refs[right] += 1;
            }
        }
        !self.nodes.is_empty() && refs[0] == 0 && refs[1..].iter().all(|&r| r == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    /// `floor(sqrt(d))`, at least one.
    Sqrt,
    Count(usize),
}

impl FeatureSubsample {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeatureSubsample::All => d,
            FeatureSubsample::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            FeatureSubsample::Count(c) => c.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_subsample: FeatureSubsample,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 6,
            min_samples_leaf: 1,
            feature_subsample: FeatureSubsample::All,
        }
    }
}

pub enum TreeTargets<'a> {
    /// Classification with the Gini criterion; weights default to 1.
    Labels {
        labels: &'a [u8],
        weights: Option<&'a [f64]>,
    },
    /// Second-order boosting targets.
    Gradients {
        grad: &'a [f64],
        hess: &'a [f64],
        reg_lambda: f64,
        min_child_weight: f64,
    },
}

#[derive(Debug, Clone, Copy)]
enum Criterion {
    Gini,
    Newton {
        reg_lambda: f64,
        min_child_weight: f64,
    },
}

/// Grows a tree on every row of `x`.
pub fn train_tree(
    x: &Matrix,
    targets: TreeTargets<'_>,
    params: &TreeParams,
    rng: &mut Rng,
) -> Result<Tree> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    train_tree_on(x, &rows, targets, params, rng)
}

/// Grows a tree on the sample `rows` (duplicates allowed, as in a bootstrap).
/// Targets are indexed by data row, not by sample position.
pub fn train_tree_on(
    x: &Matrix,
    rows: &[usize],
    targets: TreeTargets<'_>,
    params: &TreeParams,
    rng: &mut Rng,
) -> Result<Tree> {
    let required = 2 * params.min_samples_leaf.max(1);
    if rows.len() < required {
        return Err(Error::InsufficientRows {
            required,
            found: rows.len(),
        });
    }
    let (a, b, criterion) = match targets {
        TreeTargets::Labels { labels, weights } => {
            check_len(labels.len(), x.n_rows())?;
            let w = |r: usize| weights.map_or(1.0, |w| w[r]);
            if let Some(w) = weights {
                check_len(w.len(), x.n_rows())?;
            }
            let a: Vec<f64> = rows.iter().map(|&r| w(r)).collect();
            let b: Vec<f64> = rows.iter().map(|&r| w(r) * f64::from(labels[r])).collect();
            (a, b, Criterion::Gini)
        }
        TreeTargets::Gradients {
            grad,
            hess,
            reg_lambda,
            min_child_weight,
        } => {
            check_len(grad.len(), x.n_rows())?;
            check_len(hess.len(), x.n_rows())?;
            (
                rows.iter().map(|&r| hess[r]).collect(),
                rows.iter().map(|&r| grad[r]).collect(),
                Criterion::Newton {
                    reg_lambda,
                    min_child_weight,
                },
            )
        }
    };
    let mut grower = Grower {
        x,
        rows,
        a: &a,
        b: &b,
        criterion,
        params,
        rng,
        nodes: Vec::new(),
        goes_left: vec![false; rows.len()],
    };
    let lists = grower.presort();
    grower.build(lists, 0);
    Ok(Tree {
        nodes: grower.nodes,
    })
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::LengthMismatch {
            left: found,
            right: expected,
        });
    }
    Ok(())
}

struct Grower<'a> {
    x: &'a Matrix,
    /// sample position -> data row
    rows: &'a [usize],
    /// Gini: weight. Newton: hessian.
    a: &'a [f64],
    /// Gini: weight * label. Newton: gradient.
    b: &'a [f64],
    criterion: Criterion,
    params: &'a TreeParams,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// number of samples routed left, in the feature's sorted order
    n_left: usize,
    gain: f64,
}

impl Grower<'_> {
    #[inline]
    fn value(&self, sample: usize, feature: usize) -> f64 {
        self.x.get(self.rows[sample], feature)
    }

    /// Per-feature sample orderings by value, ties by sample position.
    fn presort(&self) -> Vec<Vec<usize>> {
        (0..self.x.n_cols())
            .map(|f| {
                let mut order: Vec<usize> = (0..self.rows.len()).collect();
                order.sort_by(|&p, &q| self.value(p, f).total_cmp(&self.value(q, f)));
                order
            })
            .collect()
    }

    fn leaf_value(&self, a: f64, b: f64) -> f64 {
        match self.criterion {
            Criterion::Gini => {
                if a > 0.0 {
                    b / a
                } else {
                    0.0
                }
            }
            Criterion::Newton { reg_lambda, .. } => -b / (a + reg_lambda),
        }
    }

    fn gain(&self, al: f64, bl: f64, ar: f64, br: f64) -> Option<f64> {
        match self.criterion {
            Criterion::Gini => {
                let total = al + ar;
                if al <= 0.0 || ar <= 0.0 {
                    return None;
                }
                Some(gini(total, bl + br) - al / total * gini(al, bl) - ar / total * gini(ar, br))
            }
            Criterion::Newton {
                reg_lambda,
                min_child_weight,
            } => {
                if al < min_child_weight || ar < min_child_weight {
                    return None;
                }
                let score = |g: f64, h: f64| g * g / (h + reg_lambda);
                Some(0.5 * (score(bl, al) + score(br, ar) - score(bl + br, al + ar)))
            }
        }
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match self.criterion {
            Criterion::Gini => {
                samples.iter().all(|&s| self.b[s] == 0.0)
                    || samples.iter().all(|&s| self.b[s] == self.a[s])
            }
            Criterion::Newton { .. } => false,
        }
    }

    fn find_split(
        &mut self,
        lists: &[Vec<usize>],
        total_a: f64,
        total_b: f64,
    ) -> Option<BestSplit> {
        let d = self.x.n_cols();
        let n = lists[0].len();
        let msl = self.params.min_samples_leaf.max(1);
        let m = self.params.feature_subsample.resolve(d);
        let mut features: Vec<usize> = if m >= d {
            (0..d).collect()
        } else {
            sample(&mut *self.rng, d, m).into_vec()
        };
        features.sort_unstable();

        let mut best: Option<BestSplit> = None;
        for f in features {
            let order = &lists[f];
            let (mut al, mut bl) = (0.0, 0.0);
            for p in 0..n - 1 {
                let s = order[p];
                al += self.a[s];
                bl += self.b[s];
                let n_left = p + 1;
                if n_left < msl || n - n_left < msl {
                    continue;
                }
                let lo = self.value(s, f);
                let hi = self.value(order[p + 1], f);
                if lo >= hi {
                    continue;
                }
                let Some(gain) = self.gain(al, bl, total_a - al, total_b - bl) else {
                    continue;
                };
                if gain > MIN_SPLIT_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        n_left,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> usize {
        let samples = &lists[0];
        let total_a: f64 = samples.iter().map(|&s| self.a[s]).sum();
        let total_b: f64 = samples.iter().map(|&s| self.b[s]).sum();
        let idx = self.nodes.len();
        let leaf = Node::Leaf {
            value: self.leaf_value(total_a, total_b),
        };
        self.nodes.push(leaf.clone());

        let n = samples.len();
        if depth >= self.params.max_depth
            || n < 2 * self.params.min_samples_leaf.max(1)
            || self.is_pure(samples)
            || self.x.n_cols() == 0
        {
            return idx;
        }
        let Some(split) = self.find_split(&lists, total_a, total_b) else {
            return idx;
        };

        let order = &lists[split.feature];
        for &s in &order[..split.n_left] {
            self.goes_left[s] = true;
        }
        for &s in &order[split.n_left..] {
            self.goes_left[s] = false;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in &lists {
            let mut l = Vec::with_capacity(split.n_left);
            let mut r = Vec::with_capacity(n - split.n_left);
            for &s in list {
                if self.goes_left[s] {
                    l.push(s);
                } else {
                    r.push(s);
                }
            }
            left_lists.push(l);
            right_lists.push(r);
        }
        drop(lists);
        let left = self.build(left_lists, depth + 1);
        let right = self.build(right_lists, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        idx
    }
}

/// Gini impurity `2p(1-p)` of a node with total weight `w` and positive weight `pos`.
#[inline]
pub fn gini(w: f64, pos: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let p = pos / w;
    2.0 * p * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    fn labels_tree(x: &Matrix, y: &[u8], params: &TreeParams) -> Tree {
        train_tree(
            x,
            TreeTargets::Labels {
                labels: y,
                weights: None,
            },
            params,
            &mut rng_from_seed(0),
        )
        .unwrap()
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let x = col(&[1.0, 2.0, 3.0]);
        let t = labels_tree(&x, &[1, 1, 1], &TreeParams::default());
        assert_eq!(t.nodes, vec![Node::Leaf { value: 1.0 }]);
        let t = labels_tree(&x, &[0, 0, 0], &TreeParams::default());
        assert_eq!(t.nodes, vec![Node::Leaf { value: 0.0 }]);
    }

    #[test]
    fn separable_split_at_midpoint() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let t = labels_tree(&x, &[0, 0, 1, 1], &TreeParams::default());
        assert_eq!(
            t.nodes,
            vec![
                Node::Split {
                    feature: 0,
                    threshold: 2.5,
                    left: 1,
                    right: 2
                },
                Node::Leaf { value: 0.0 },
                Node::Leaf { value: 1.0 },
            ]
        );
        assert!(t.validate());
    }

    #[test]
    fn depth_zero_is_base_rate() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let params = TreeParams {
            max_depth: 0,
            ..TreeParams::default()
        };
        let t = labels_tree(&x, &[0, 0, 0, 1], &params);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 0.25 }]);
    }

    #[test]
    fn insufficient_rows() {
        let x = col(&[1.0, 2.0, 3.0]);
        let params = TreeParams {
            min_samples_leaf: 2,
            ..TreeParams::default()
        };
        let r = train_tree(
            &x,
            TreeTargets::Labels {
                labels: &[0, 1, 0],
                weights: None,
            },
            &params,
            &mut rng_from_seed(0),
        );
        assert!(matches!(
            r,
            Err(Error::InsufficientRows {
                required: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x = col(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let params = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let t = labels_tree(&x, &[1, 0, 0, 0, 0, 0], &params);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 3.5),
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn tie_prefers_lower_feature() {
        // two identical features: the split must use feature 0
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]).unwrap();
        let t = labels_tree(&x, &[0, 0, 1, 1], &TreeParams::default());
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn newton_leaf_weights() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let grad = [0.5, 0.5, -0.5, -0.5];
        let hess = [0.25; 4];
        let params = TreeParams {
            max_depth: 1,
            ..TreeParams::default()
        };
        let t = train_tree(
            &x,
            TreeTargets::Gradients {
                grad: &grad,
                hess: &hess,
                reg_lambda: 1.0,
                min_child_weight: 0.0,
            },
            &params,
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(t.predict_row(&[1.0]), -1.0 / 1.5);
        assert_eq!(t.predict_row(&[4.0]), 1.0 / 1.5);
    }

    #[test]
    fn min_child_weight_blocks_split() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let t = train_tree(
            &x,
            TreeTargets::Gradients {
                grad: &[0.5, 0.5, -0.5, -0.5],
                hess: &[0.25; 4],
                reg_lambda: 1.0,
                min_child_weight: 0.6,
            },
            &TreeParams::default(),
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(t.n_leaves(), 1);
    }

    #[test]
    fn duplicate_values_never_split_between() {
        let x = col(&[1.0, 1.0, 1.0, 2.0]);
        let t = labels_tree(&x, &[0, 1, 0, 1], &TreeParams::default());
        for n in &t.nodes {
            if let Node::Split { threshold, .. } = n {
                assert_eq!(*threshold, 1.5);
            }
        }
    }
}
