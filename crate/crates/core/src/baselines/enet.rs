//! Elastic-net least squares by cyclic coordinate descent.
//!
//! Minimises `|y - X b|^2 + l1 |b|_1 + l2 |b|_2^2` with no intercept; callers
//! standardize both sides first.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticNetOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetOptions {
    fn default() -> Self {
        ElasticNetOptions {
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElasticNetFit {
    pub coefficients: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Share of the penalty on the squared norm, `l2 / (l1 + l2)`.
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each full sweep.
    pub objective_trace: Vec<f64>,
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

pub fn objective(x: &DMatrix<f64>, y: &[f64], beta: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let rss: f64 = (0..x.nrows())
        .map(|i| {
            let fit: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    rss + lambda1 * beta.iter().map(|b| b.abs()).sum::<f64>() + lambda2 * beta.iter().map(|b| b * b).sum::<f64>()
}

/// The smallest `l1` at which the all-zero solution is optimal.
pub fn lambda1_max(x: &DMatrix<f64>, y: &[f64]) -> f64 {
    (0..x.ncols())
        .map(|j| 2.0 * x.column(j).iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

pub fn elastic_net_fit(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda1: f64,
    lambda2: f64,
    opts: &ElasticNetOptions,
) -> Result<ElasticNetFit> {
    elastic_net_fit_from(x, y, lambda1, lambda2, opts, None)
}

/// As [`elastic_net_fit`], starting the descent from `start` instead of zero.
pub fn elastic_net_fit_from(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda1: f64,
    lambda2: f64,
    opts: &ElasticNetOptions,
    start: Option<&[f64]>,
) -> Result<ElasticNetFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::InvalidArgument("response and design differ in length".into()));
    }
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument("penalties must be non-negative".into()));
    }
    let sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut beta = match start {
        Some(b) if b.len() == p => b.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("start has the wrong length".into())),
        None => vec![0.0; p],
    };
    let mut resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>())
        .collect();
    let mut trace = vec![objective(x, y, &beta, lambda1, lambda2)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            let denom = sq[j] + lambda2;
            if denom == 0.0 {
                continue;
            }
            let col = x.column(j);
            let rho: f64 = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() + sq[j] * beta[j];
            let new = soft_threshold(rho, lambda1 / 2.0) / denom;
            let delta = new - beta[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col.iter()) {
                    *r -= a * delta;
                }
                beta[j] = new;
            }
            max_step = max_step.max(delta.abs());
        }
        trace.push(objective(x, y, &beta, lambda1, lambda2));
        if max_step < opts.tol {
            converged = true;
            break;
        }
    }
    let total = lambda1 + lambda2;
    Ok(ElasticNetFit {
        coefficients: beta,
        lambda1,
        lambda2,
        alpha: if total > 0.0 { lambda2 / total } else { 0.0 },
        iterations,
        converged,
        objective_trace: trace,
    })
}
