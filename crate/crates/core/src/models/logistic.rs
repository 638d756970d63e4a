//! L2-regularized logistic regression fit by full-batch gradient descent.
//!
//! Objective: `mean(softplus(z_i) - y_i z_i) + lambda/2 * |w|^2` with
//! `z_i = w.x_i + b`; the bias is not penalized.

use serde::{Deserialize, Serialize};

use super::ensemble::sigmoid;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

impl LinearModel {
    pub fn zeros(d: usize, l2_lambda: f64) -> Self {
        LinearModel {
            weights: vec![0.0; d],
            bias: 0.0,
            l2_lambda,
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.bias + dot(&self.weights, x)
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticParams {
    #[serde(default = "LogisticParams::default_lambda")]
    pub l2_lambda: f64,
    #[serde(default = "LogisticParams::default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "LogisticParams::default_tol")]
    pub tol: f64,
}

impl LogisticParams {
    fn default_lambda() -> f64 {
        1e-3
    }
    fn default_max_iter() -> usize {
        1000
    }
    fn default_tol() -> f64 {
        1e-6
    }
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2_lambda: Self::default_lambda(),
            max_iter: Self::default_max_iter(),
            tol: Self::default_tol(),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn logistic_loss(x: &Matrix, y: &[u8], weights: &[f64], bias: f64, l2_lambda: f64) -> f64 {
    let n = x.n_rows() as f64;
    let nll: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &yi)| {
            let z = bias + dot(weights, row);
            softplus(z) - f64::from(yi) * z
        })
        .sum();
    nll / n + 0.5 * l2_lambda * dot(weights, weights)
}

/// Analytic gradient `(dL/dw, dL/db)` of [`logistic_loss`].
pub fn logistic_gradient(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &yi) in x.rows().zip(y) {
        let r = sigmoid(bias + dot(weights, row)) - f64::from(yi);
        gb += r;
        for (g, &v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for (g, &w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2_lambda * w;
    }
    (gw, gb / n)
}

pub fn train_logistic(x: &Matrix, y: &[u8], params: &LogisticParams) -> Result<LinearModel> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.n_rows(),
        });
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    let lambda = params.l2_lambda;
    let mut w = vec![0.0; x.n_cols()];
    let mut b = 0.0;
    let mut loss = logistic_loss(x, y, &w, b, lambda);
    let mut step = 1.0;
    for _ in 0..params.max_iter {
        let (gw, gb) = logistic_gradient(x, y, &w, b, lambda);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < params.tol {
            break;
        }
        let gnorm2 = dot(&gw, &gw) + gb * gb;
        // backtracking: halve until the Armijo condition holds
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let b_new = b - step * gb;
            let new_loss = logistic_loss(x, y, &w_new, b_new, lambda);
            if !new_loss.is_finite() {
                return Err(Error::NonFinite("logistic loss".into()));
            }
            if new_loss <= loss - 0.5 * step * gnorm2 {
                w = w_new;
                b = b_new;
                loss = new_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(64.0);
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("logistic loss".into()));
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        l2_lambda: lambda,
    })
}
