//! Kraskov–Stögbauer–Grassberger nearest-neighbour mutual information
//! (first estimator) and a permutation test of independence built on it.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, hash_f64s, stream_rng};
use crate::stats::digamma;

/// Relative jitter added to break ties.
const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KraskovConfig {
    pub k_neighbors: usize,
    pub permutations: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for KraskovConfig {
    fn default() -> Self {
        KraskovConfig {
            k_neighbors: 3,
            permutations: 99,
            seed: 0,
            alpha: 0.05,
        }
    }
}

impl KraskovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidArgument("k_neighbors must be positive".into()));
        }
        if self.permutations < 19 {
            return Err(Error::InvalidArgument("at least 19 permutations are required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Add seeded uniform noise scaled to the column's range. The stream is
/// keyed by the column contents so the same column always gets the same
/// noise, whichever argument position it occupies.
fn jitter(values: &[f64], seed: u64) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::ConstantColumn("<kraskov input>".into()));
    }
    let mut rng = stream_rng(derive_seed(seed, hash_f64s(values)), 0);
    Ok(values
        .iter()
        .map(|&v| v + JITTER * range * (rng.gen::<f64>() - 0.5))
        .collect())
}

/// Max-norm distance from each point to its `k`-th nearest neighbour.
fn kth_distances(x: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut dist = vec![0.0; n];
    let mut best = Vec::with_capacity(k + 1);
    for pos in 0..n {
        let i = order[pos];
        best.clear();
        let (mut left, mut right) = (pos, pos + 1);
        loop {
            let cutoff = if best.len() == k { best[k - 1] } else { f64::INFINITY };
            let dl = if left > 0 { x[i] - x[order[left - 1]] } else { f64::INFINITY };
            let dr = if right < n { x[order[right]] - x[i] } else { f64::INFINITY };
            let (dx, j) = if dl <= dr {
                if dl == f64::INFINITY {
                    break;
                }
                left -= 1;
                (dl, order[left])
            } else {
                right += 1;
                (dr, order[right - 1])
            };
            if dx >= cutoff {
                break;
            }
            let d = dx.max((y[i] - y[j]).abs());
            if d < cutoff {
                let at = best.partition_point(|&b| b <= d);
                best.insert(at, d);
                best.truncate(k);
            }
        }
        dist[i] = best[k - 1];
    }
    dist
}

/// Number of points strictly within `eps[i]` of `v[i]`, excluding `i`.
fn marginal_counts(v: &[f64], eps: &[f64]) -> Vec<usize> {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    v.iter()
        .zip(eps)
        .map(|(&c, &e)| {
            // compare differences, not shifted bounds, so the k-th neighbour
            // itself (at distance exactly e) is never counted
            let lo = sorted.partition_point(|&s| c - s >= e);
            let hi = sorted.partition_point(|&s| s - c < e);
            hi - lo - 1
        })
        .collect()
}

fn mi_on_jittered(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let eps = kth_distances(x, y, k);
    let nx = marginal_counts(x, &eps);
    let ny = marginal_counts(y, &eps);
    let avg: f64 = nx
        .iter()
        .zip(&ny)
        .map(|(&a, &b)| digamma(a as f64 + 1.0) + digamma(b as f64 + 1.0))
        .sum::<f64>()
        / n as f64;
    digamma(k as f64) + digamma(n as f64) - avg
}

fn check_inputs(x: &[f64], y: &[f64], k: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("samples differ in length".into()));
    }
    if x.len() <= k {
        return Err(Error::TooFewRows {
            rows: x.len(),
            needed: k + 1,
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(())
}

/// Mutual information in nats. Ties are broken with deterministic jitter.
pub fn kraskov_mi(x: &[f64], y: &[f64], k: usize) -> Result<f64> {
    check_inputs(x, y, k)?;
    let (xj, yj) = (jitter(x, 0)?, jitter(y, 0)?);
    Ok(mi_on_jittered(&xj, &yj, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceTest {
    pub mi_hat: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Permutation test: `p = (1 + #{b : I_b >= I_obs}) / (B + 1)`.
pub fn independence_test(x: &[f64], y: &[f64], cfg: &KraskovConfig) -> Result<IndependenceTest> {
    cfg.validate()?;
    check_inputs(x, y, cfg.k_neighbors)?;
    let (xj, yj) = (jitter(x, cfg.seed)?, jitter(y, cfg.seed)?);
    let observed = mi_on_jittered(&xj, &yj, cfg.k_neighbors);
    let exceed: usize = (0..cfg.permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut perm = yj.clone();
            perm.shuffle(&mut stream_rng(cfg.seed, b + 1));
            (mi_on_jittered(&xj, &perm, cfg.k_neighbors) >= observed) as usize
        })
        .sum();
    let p_value = (1 + exceed) as f64 / (cfg.permutations + 1) as f64;
    Ok(IndependenceTest {
        mi_hat: observed,
        p_value,
        reject: p_value <= cfg.alpha,
    })
}
