//! C-SVM with an RBF kernel, trained by SMO with second-order working-set
//! selection.

use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 0.1,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmState {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl SvmState {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf(self.gamma, sv, x))
            .sum::<f64>()
            + self.bias
    }
}

pub fn train_svm(table: &FeatureTable, params: &SvmParams) -> Result<SvmState> {
    params.validate()?;
    table.require_both_classes("svm training")?;
    let n = table.n_rows();
    let y: Vec<f64> = table
        .labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| rbf(params.gamma, &table.rows[i], &table.rows[j]))
                .collect()
        })
        .collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let Some((i, j)) = select_working_set(&y, &alpha, &grad, &k, params.tol, &upper, &lower)
        else {
            converged = true;
            break;
        };
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = positive(k[i][i] + k[j][j] + 2.0 * q(i, j));
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(k[i][i] + k[j][j] - 2.0 * q(i, j));
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }
    if !converged {
        log::warn!(
            "svm: SMO did not converge within {} iterations",
            params.max_iter
        );
    }

    let bias = -rho(&y, &alpha, &grad, &upper, &lower);
    let (mut support_vectors, mut coefficients) = (Vec::new(), Vec::new());
    for i in 0..n {
        if alpha[i] > 0.0 {
            support_vectors.push(table.rows[i].clone());
            coefficients.push(alpha[i] * y[i]);
        }
    }
    Ok(SvmState {
        gamma: params.gamma,
        support_vectors,
        coefficients,
        bias,
        iterations,
        converged,
    })
}

fn positive(q: f64) -> f64 {
    if q > 0.0 {
        q
    } else {
        TAU
    }
}

fn select_working_set(
    y: &[f64],
    alpha: &[f64],
    grad: &[f64],
    k: &[Vec<f64>],
    tol: f64,
    upper: &impl Fn(f64) -> bool,
    lower: &impl Fn(f64) -> bool,
) -> Option<(usize, usize)> {
    let n = y.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut gmax_idx = None;
    for t in 0..n {
        let up_ok = if y[t] > 0.0 {
            !upper(alpha[t])
        } else {
            !lower(alpha[t])
        };
        if up_ok && -y[t] * grad[t] >= gmax {
            gmax = -y[t] * grad[t];
            gmax_idx = Some(t);
        }
    }
    let i = gmax_idx?;
    let mut gmax2 = f64::NEG_INFINITY;
    let mut best = None;
    let mut obj_min = f64::INFINITY;
    for j in 0..n {
        let low_ok = if y[j] > 0.0 {
            !lower(alpha[j])
        } else {
            !upper(alpha[j])
        };
        if !low_ok {
            continue;
        }
        let yg = y[j] * grad[j];
        gmax2 = gmax2.max(yg);
        let grad_diff = gmax + yg;
        if grad_diff > 0.0 {
            let quad = positive(k[i][i] + k[j][j] - 2.0 * k[i][j]);
            let obj = -(grad_diff * grad_diff) / quad;
            if obj <= obj_min {
                obj_min = obj;
                best = Some(j);
            }
        }
    }
    if gmax + gmax2 < tol {
        return None;
    }
    best.map(|j| (i, j))
}

fn rho(
    y: &[f64],
    alpha: &[f64],
    grad: &[f64],
    upper: &impl Fn(f64) -> bool,
    lower: &impl Fn(f64) -> bool,
) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
