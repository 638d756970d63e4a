//! Independent oracles shared by the integration tests. Each one is a
//! deliberately naive restatement of a definition, sharing no code with the
//! implementation it checks.

#![allow(dead_code)]

use distress::models::{Combination, Node, Tree, TreeEnsemble};
use distress::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counted half.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// (tp, fp, tn, fn) by direct recount.
pub fn recount(scores: &[f64], labels: &[u8], threshold: f64) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, false) => c.2 += 1,
            (false, true) => c.3 += 1,
        }
    }
    c
}

/// Interventional value of coalition `s`: mean over background rows of `f`
/// with features in `s` taken from `x`.
fn coalition_value(f: &dyn Fn(&[f64]) -> f64, x: &[f64], bg: &Matrix, s: &[bool]) -> f64 {
    let mut total = 0.0;
    for b in bg.rows() {
        let z: Vec<f64> = (0..x.len())
            .map(|j| if s[j] { x[j] } else { b[j] })
            .collect();
        total += f(&z);
    }
    total / bg.n_rows() as f64
}

/// Shapley values as the average marginal contribution over all `m!`
/// orderings. Only for small `m`.
pub fn permutation_shapley(f: &dyn Fn(&[f64]) -> f64, x: &[f64], bg: &Matrix) -> Vec<f64> {
    let m = x.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut phi = vec![0.0; m];
    let mut count = 0usize;
    loop {
        let mut s = vec![false; m];
        let mut prev = coalition_value(f, x, bg, &s);
        for &j in &perm {
            s[j] = true;
            let cur = coalition_value(f, x, bg, &s);
            phi[j] += cur - prev;
            prev = cur;
        }
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    phi.iter().map(|p| p / count as f64).collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Central finite-difference gradient.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let mut up = at.to_vec();
            let mut dn = at.to_vec();
            up[k] += h;
            dn[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Split score (higher is better) for a candidate partition of a node.
pub enum SplitScore<'a> {
    /// Reduction in weighted Gini impurity.
    Gini {
        labels: &'a [u8],
        weights: &'a [f64],
    },
    /// Second-order structure-score gain.
    Newton {
        grad: &'a [f64],
        hess: &'a [f64],
        lambda: f64,
    },
}

impl SplitScore<'_> {
    fn node_score(&self, rows: &[usize]) -> f64 {
        match self {
            SplitScore::Gini { labels, weights } => {
                let w: f64 = rows.iter().map(|&r| weights[r]).sum();
                if w == 0.0 {
                    return 0.0;
                }
                let p: f64 = rows
                    .iter()
                    .filter(|&&r| labels[r] == 1)
                    .map(|&r| weights[r])
                    .sum::<f64>()
                    / w;
                -w * 2.0 * p * (1.0 - p)
            }
            SplitScore::Newton { grad, hess, lambda } => {
                let g: f64 = rows.iter().map(|&r| grad[r]).sum();
                let h: f64 = rows.iter().map(|&r| hess[r]).sum();
                0.5 * g * g / (h + lambda)
            }
        }
    }

    pub fn gain(&self, left: &[usize], right: &[usize]) -> f64 {
        let all: Vec<usize> = left.iter().chain(right).copied().collect();
        self.node_score(left) + self.node_score(right) - self.node_score(&all)
    }
}

/// Best gain over every feature and every threshold between distinct
/// consecutive values, subject to `min_leaf` rows per side.
pub fn best_split_gain(
    x: &Matrix,
    rows: &[usize],
    score: &SplitScore<'_>,
    min_leaf: usize,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in 0..x.n_cols() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= t);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let g = score.gain(&l, &r);
            if best.is_none_or(|b| g > b) {
                best = Some(g);
            }
        }
    }
    best
}

/// Checks that every internal node of `tree` uses a split whose gain equals
/// the exhaustive optimum for the rows reaching it. Returns the number of
/// nodes checked.
pub fn assert_splits_optimal(
    tree: &Tree,
    x: &Matrix,
    rows: &[usize],
    score: &SplitScore<'_>,
    min_leaf: usize,
    tol: f64,
) -> usize {
    fn walk(
        tree: &Tree,
        idx: usize,
        x: &Matrix,
        rows: &[usize],
        score: &SplitScore<'_>,
        min_leaf: usize,
        tol: f64,
    ) -> usize {
        match tree.nodes[idx] {
            Node::Leaf { .. } => 0,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x.get(i, feature) <= threshold);
                let chosen = score.gain(&l, &r);
                let best =
                    best_split_gain(x, rows, score, min_leaf).expect("a split node has candidates");
                assert!(
                    chosen >= best - tol,
                    "node {idx}: chosen gain {chosen} below exhaustive optimum {best}"
                );
                1 + walk(tree, left, x, &l, score, min_leaf, tol)
                    + walk(tree, right, x, &r, score, min_leaf, tol)
            }
        }
    }
    walk(tree, 0, x, rows, score, min_leaf, tol)
}

/// Random full tree over `d` features with depth at most `max_depth`.
pub fn random_tree(r: &mut ChaCha8Rng, d: usize, max_depth: usize, leaf_range: (f64, f64)) -> Tree {
    fn grow(
        r: &mut ChaCha8Rng,
        nodes: &mut Vec<Node>,
        d: usize,
        depth: usize,
        lr: (f64, f64),
    ) -> usize {
        let idx = nodes.len();
        if depth == 0 || r.gen_bool(0.2) {
            nodes.push(Node::Leaf {
                value: r.gen_range(lr.0..lr.1),
            });
            return idx;
        }
        nodes.push(Node::Leaf { value: 0.0 });
        let feature = r.gen_range(0..d);
        let threshold = r.gen_range(-1.0..1.0);
        let left = grow(r, nodes, d, depth - 1, lr);
        let right = grow(r, nodes, d, depth - 1, lr);
        nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }
    let mut nodes = Vec::new();
    grow(r, &mut nodes, d, max_depth, leaf_range);
    Tree { nodes }
}

/// Random ensemble of any combination rule.
pub fn random_ensemble(
    r: &mut ChaCha8Rng,
    d: usize,
    max_depth: usize,
    n_trees: usize,
    combination: Combination,
) -> TreeEnsemble {
    let leaf_range = match combination {
        Combination::AverageProbability => (0.0, 1.0),
        Combination::WeightedVote => (-1.0, 1.0),
        Combination::AdditiveLogit => (-2.0, 2.0),
    };
    let mut trees: Vec<Tree> = (0..n_trees)
        .map(|_| random_tree(r, d, max_depth, leaf_range))
        .collect();
    if combination == Combination::WeightedVote {
        for t in &mut trees {
            t.map_leaves(|v| if v > 0.0 { 1.0 } else { -1.0 });
        }
    }
    let tree_weights = (0..n_trees)
        .map(|_| match combination {
            Combination::AdditiveLogit => 0.3,
            _ => r.gen_range(0.1..1.5),
        })
        .collect();
    TreeEnsemble {
        trees,
        tree_weights,
        combination,
        base_score: if combination == Combination::AdditiveLogit {
            r.gen_range(-1.0..1.0)
        } else {
            0.0
        },
    }
}

pub fn random_matrix(r: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let data = (0..n * d).map(|_| r.gen_range(-1.5..1.5)).collect();
    Matrix::new(n, d, data).unwrap()
}

/// Matrix whose entries repeat often, to exercise ties in split search.
pub fn coarse_matrix(r: &mut ChaCha8Rng, n: usize, d: usize, levels: u32) -> Matrix {
    let mid = 0.5 * f64::from(levels - 1);
    let data = (0..n * d)
        .map(|_| f64::from(r.gen_range(0..levels)) - mid)
        .collect();
    Matrix::new(n, d, data).unwrap()
}
