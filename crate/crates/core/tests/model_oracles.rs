mod common;

use common::{
    assert_splits_optimal, coarse_matrix, finite_difference, random_matrix, rng, SplitScore,
};
use distress::models::gbdt::{log_loss, train_gbdt_with_history};
use distress::models::logistic::{logistic_gradient, logistic_loss};
use distress::models::{
    sigmoid, train_forest, train_gbdt, train_logistic, train_tree, ForestParams, GbdtParams,
    LogisticParams, Node, Preset, TreeParams, TreeTargets,
};
use distress::seed::rng_from_seed;
use distress::synthetic::{imbalanced_fixture, FixtureSpec};
use distress::Matrix;
use rand::Rng;

fn labels_for(r: &mut rand_chacha::ChaCha8Rng, x: &Matrix) -> Vec<u8> {
    loop {
        let y: Vec<u8> = x
            .rows()
            .map(|row| {
                u8::from(
                    row[0] + 0.5 * row.get(1).copied().unwrap_or(0.0) + r.gen_range(-0.7..0.7)
                        > 0.0,
                )
            })
            .collect();
        if y.contains(&0) && y.contains(&1) {
            return y;
        }
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|v| v * v).sum::<f64>().sqrt());
    diff / scale.max(1e-300)
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut r = rng(100);
    let x = random_matrix(&mut r, 40, 5);
    let y = labels_for(&mut r, &x);
    for _ in 0..10 {
        let w: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
        let b = r.gen_range(-1.0..1.0);
        let lambda = r.gen_range(0.0..0.5);
        let (gw, gb) = logistic_gradient(&x, &y, &w, b, lambda);
        let mut analytic = gw.clone();
        analytic.push(gb);
        let mut at = w.clone();
        at.push(b);
        let f = |p: &[f64]| logistic_loss(&x, &y, &p[..5], p[5], lambda);
        let numeric = finite_difference(&f, &at, 1e-5);
        assert!(
            rel_err(&analytic, &numeric) < 1e-6,
            "{analytic:?} vs {numeric:?}"
        );
    }
}

#[test]
fn logistic_training_reaches_a_stationary_point() {
    let mut r = rng(101);
    let x = random_matrix(&mut r, 200, 3);
    let y = labels_for(&mut r, &x);
    let params = LogisticParams {
        max_iter: 5000,
        tol: 1e-8,
        ..LogisticParams::default()
    };
    let m = train_logistic(&x, &y, &params).unwrap();
    let (gw, gb) = logistic_gradient(&x, &y, &m.weights, m.bias, params.l2_lambda);
    assert!(gw.iter().chain([&gb]).all(|g| g.abs() < 1e-6));
}

#[test]
fn gini_tree_splits_are_exhaustive_optima() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut r = rng(200 + seed);
        let n = r.gen_range(8..=50);
        let d = r.gen_range(1..=4);
        let x = if seed % 2 == 0 {
            random_matrix(&mut r, n, d)
        } else {
            coarse_matrix(&mut r, n, d, 4)
        };
        let y = labels_for(&mut r, &x);
        let weights: Vec<f64> = if seed % 3 == 0 {
            (0..n).map(|_| r.gen_range(0.1..2.0)).collect()
        } else {
            vec![1.0; n]
        };
        let msl = 1 + (seed as usize % 3);
        if n < 2 * msl {
            continue;
        }
        let params = TreeParams {
            max_depth: 4,
            min_samples_leaf: msl,
            ..TreeParams::default()
        };
        let tree = train_tree(
            &x,
            TreeTargets::Labels {
                labels: &y,
                weights: Some(&weights),
            },
            &params,
            &mut rng_from_seed(seed),
        )
        .unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let score = SplitScore::Gini {
            labels: &y,
            weights: &weights,
        };
        checked += assert_splits_optimal(&tree, &x, &rows, &score, msl, 1e-9);
    }
    assert!(checked > 40, "only {checked} split nodes exercised");
}

#[test]
fn newton_tree_splits_are_exhaustive_optima() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut r = rng(300 + seed);
        let n = r.gen_range(8..=50);
        let d = r.gen_range(1..=4);
        let x = if seed % 2 == 0 {
            random_matrix(&mut r, n, d)
        } else {
            coarse_matrix(&mut r, n, d, 5)
        };
        let grad: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let hess: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..0.25)).collect();
        let lambda = [0.0, 1.0, 3.0][seed as usize % 3];
        let params = TreeParams {
            max_depth: 3,
            ..TreeParams::default()
        };
        let tree = train_tree(
            &x,
            TreeTargets::Gradients {
                grad: &grad,
                hess: &hess,
                reg_lambda: lambda,
                min_child_weight: 0.0,
            },
            &params,
            &mut rng_from_seed(seed),
        )
        .unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let score = SplitScore::Newton {
            grad: &grad,
            hess: &hess,
            lambda,
        };
        checked += assert_splits_optimal(&tree, &x, &rows, &score, 1, 1e-9);
        // leaves carry the Newton step of the rows they hold
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for i in 0..n {
            let mut idx = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = tree.nodes[idx]
            {
                idx = if x.get(i, feature) <= threshold {
                    left
                } else {
                    right
                };
            }
            members[idx].push(i);
        }
        for (idx, rows) in members.iter().enumerate() {
            if let Node::Leaf { value } = tree.nodes[idx] {
                let g: f64 = rows.iter().map(|&i| grad[i]).sum();
                let h: f64 = rows.iter().map(|&i| hess[i]).sum();
                assert!((value - (-g / (h + lambda))).abs() < 1e-12);
            }
        }
    }
    assert!(checked > 40);
}

/// Two rounds routed by hand: every row's gradient and Hessian comes from
/// the previous round's margin, leaves are -G/(H + lambda), and the learning
/// rate scales each tree.
#[test]
fn gbdt_two_rounds_match_hand_routing() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
    let y = [0u8, 0, 1, 0, 1, 1];
    let params = GbdtParams {
        n_trees: 2,
        learning_rate: 0.5,
        max_depth: 1,
        reg_lambda: 1.0,
        min_child_weight: 0.0,
        ..GbdtParams::preset(Preset::Xgboost)
    };
    let model = train_gbdt(&x, &y, &params, 0).unwrap();
    assert_eq!(model.base_score, 0.0);

    fn best_stump(x: &[f64], g: &[f64], h: &[f64], lambda: f64) -> (f64, f64, f64) {
        let score = |rows: &[usize]| {
            let gs: f64 = rows.iter().map(|&i| g[i]).sum();
            let hs: f64 = rows.iter().map(|&i| h[i]).sum();
            (gs * gs / (hs + lambda), -gs / (hs + lambda))
        };
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
        for k in 0..x.len() - 1 {
            let t = 0.5 * (x[k] + x[k + 1]);
            let l: Vec<usize> = (0..x.len()).filter(|&i| x[i] <= t).collect();
            let r: Vec<usize> = (0..x.len()).filter(|&i| x[i] > t).collect();
            let (sl, vl) = score(&l);
            let (sr, vr) = score(&r);
            if sl + sr > best.0 {
                best = (sl + sr, t, vl, vr);
            }
        }
        (best.1, best.2, best.3)
    }

    let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let mut margin = [0.0; 6];
    for tree in &model.trees {
        let g: Vec<f64> = (0..6)
            .map(|i| sigmoid(margin[i]) - f64::from(y[i]))
            .collect();
        let h: Vec<f64> = (0..6)
            .map(|i| sigmoid(margin[i]) * (1.0 - sigmoid(margin[i])))
            .collect();
        let (t, vl, vr) = best_stump(&xs, &g, &h, 1.0);
        match tree.nodes[0] {
            Node::Split { threshold, .. } => assert!((threshold - t).abs() < 1e-12),
            _ => panic!("expected a stump"),
        }
        for i in 0..6 {
            let leaf = if xs[i] <= t { vl } else { vr };
            assert!((tree.predict_row(&[xs[i]]) - leaf).abs() < 1e-12);
            margin[i] += 0.5 * leaf;
        }
    }
    for i in 0..6 {
        assert!((model.margin(&[xs[i]]) - margin[i]).abs() < 1e-12);
    }
}

#[test]
fn gbdt_training_loss_never_increases() {
    let ds = imbalanced_fixture(&FixtureSpec {
        n_rows: 1500,
        missing_rate: 0.0,
        ..FixtureSpec::default()
    });
    let x = ds.to_matrix().unwrap();
    for preset in [Preset::Xgboost, Preset::Catboost, Preset::Lightgbm] {
        let params = GbdtParams {
            n_trees: 60,
            ..GbdtParams::preset(preset)
        };
        let (model, history) = train_gbdt_with_history(&x, ds.labels(), &params, 1).unwrap();
        assert_eq!(history.len(), 61);
        assert!(
            history.windows(2).all(|w| w[1] <= w[0]),
            "{preset:?}: {history:?}"
        );
        let margins: Vec<f64> = x.rows().map(|r| model.margin(r)).collect();
        assert!((log_loss(&margins, ds.labels()) - history[60]).abs() < 1e-9);
    }
}

#[test]
fn forest_is_seed_stable_and_thread_independent() {
    let mut r = rng(400);
    let x = random_matrix(&mut r, 300, 6);
    let y = labels_for(&mut r, &x);
    let params = ForestParams {
        n_trees: 24,
        max_depth: 6,
        ..ForestParams::default()
    };
    let reference = train_forest(&x, &y, &params, 9).unwrap();
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let again = pool.install(|| train_forest(&x, &y, &params, 9).unwrap());
        assert_eq!(reference, again, "threads = {threads}");
    }
    assert_ne!(reference, train_forest(&x, &y, &params, 10).unwrap());
}
