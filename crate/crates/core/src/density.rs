//! Kernel conditional densities with cross-validated bandwidths, and the
//! entropy coefficient built on them.
//!
//! The estimator is a product kernel: Gaussian for continuous variables and
//! Aitchison–Aitken for discrete ones. For a target `y` and conditioners `x`
//!
//! ```text
//! f(y | x) = sum_m W(x, X_m) K(y, Y_m) / sum_m W(x, X_m)
//! ```
//!
//! where `W` is the product of the conditioner kernels. Bandwidths maximise
//! the held-out log-likelihood by coordinate descent over fixed grids.
//! A conditioner may be given an infinite bandwidth, which makes its kernel
//! constant and removes it from the model ("smoothed out").
//!
//! Discrete values are carried as their level codes in `f64`.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Column, MixedDataTable};
use crate::error::{Error, Result};
use crate::rng::fold_assignment;

/// Densities below this are raised to it before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Lower bound on a single log kernel weight. `exp` of anything below
/// roughly -745 is already zero, so this only keeps arithmetic finite.
const LOG_KERNEL_FLOOR: f64 = -1e4;
pub const MIN_ROWS: usize = 25;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum SampleKind {
    Continuous,
    Discrete { levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Sample {
    values: Vec<f64>,
    kind: SampleKind,
}

impl Sample {
    fn from_table(table: &MixedDataTable, idx: usize) -> Self {
        match table.column(idx) {
            Column::Continuous(v) => Sample {
                values: v.clone(),
                kind: SampleKind::Continuous,
            },
            Column::Discrete(c) => Sample {
                values: c.iter().map(|&v| v as f64).collect(),
                kind: SampleKind::Discrete {
                    levels: table.spec(idx).kind.n_levels().unwrap_or(1),
                },
            },
        }
    }
}

/// Unnormalised log weight of a conditioner kernel.
fn log_weight(kind: SampleKind, h: f64, a: f64, b: f64) -> f64 {
    match kind {
        SampleKind::Continuous => {
            if h.is_infinite() {
                0.0
            } else {
                let d = (a - b) / h;
                -0.5 * d * d
            }
        }
        SampleKind::Discrete { levels } => {
            if levels <= 1 {
                0.0
            } else if a == b {
                (1.0 - h).ln().max(LOG_KERNEL_FLOOR)
            } else {
                (h / (levels - 1) as f64).ln().max(LOG_KERNEL_FLOOR)
            }
        }
    }
}

/// Normalised target kernel: a density (continuous) or a mass (discrete).
fn target_kernel(kind: SampleKind, h: f64, y: f64, yi: f64) -> f64 {
    match kind {
        SampleKind::Continuous => {
            let d = (y - yi) / h;
            (-0.5 * d * d).exp() * FRAC_1_SQRT_2PI / h
        }
        SampleKind::Discrete { levels } => {
            if levels <= 1 {
                1.0
            } else if y == yi {
                1.0 - h
            } else {
                h / (levels - 1) as f64
            }
        }
    }
}

/// Normal-reference bandwidth, `1.06 sd n^(-1/5)`; 1 for a constant column.
pub fn silverman(values: &[f64]) -> f64 {
    let sd = crate::stats::ml_variance(values).sqrt();
    let h = 1.06 * sd * (values.len() as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        1.0
    }
}

/// Bandwidth search grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Number of log-spaced multiples of the reference bandwidth.
    pub continuous_points: usize,
    /// Smallest multiple of the reference bandwidth.
    pub low: f64,
    /// Largest finite multiple of the reference bandwidth.
    pub high: f64,
    /// Number of evenly spaced smoothing values on `[0, (L-1)/L]`.
    pub discrete_points: usize,
    /// Offer an infinite bandwidth to continuous conditioners.
    pub smooth_out_candidate: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            continuous_points: 13,
            low: 0.25,
            high: 8.0,
            discrete_points: 11,
            smooth_out_candidate: true,
        }
    }
}

impl GridSpec {
    fn candidates(&self, sample: &Sample, conditioner: bool) -> Vec<f64> {
        match sample.kind {
            SampleKind::Continuous => {
                let h0 = silverman(&sample.values);
                let m = self.continuous_points.max(1);
                let ratio = self.high / self.low;
                let mut c: Vec<f64> = (0..m)
                    .map(|j| {
                        let t = if m == 1 { 0.0 } else { j as f64 / (m - 1) as f64 };
                        h0 * self.low * ratio.powf(t)
                    })
                    .collect();
                if conditioner && self.smooth_out_candidate {
                    c.push(f64::INFINITY);
                }
                c
            }
            SampleKind::Discrete { levels } => discrete_grid(levels, self.discrete_points),
        }
    }
}

fn discrete_grid(levels: usize, points: usize) -> Vec<f64> {
    if levels <= 1 {
        return vec![0.0];
    }
    let top = (levels - 1) as f64 / levels as f64;
    let m = points.max(2);
    (0..m).map(|j| top * j as f64 / (m - 1) as f64).collect()
}

fn at_upper_bound(kind: SampleKind, h: f64) -> bool {
    match kind {
        SampleKind::Continuous => h.is_infinite(),
        SampleKind::Discrete { levels } => levels <= 1 || h >= (levels - 1) as f64 / levels as f64 - 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCvConfig {
    /// `None` is leave-one-out; `Some(h)` uses `h` seeded folds.
    pub folds: Option<usize>,
    pub grid: GridSpec,
    pub max_passes: usize,
    /// Prefer the largest bandwidth whose held-out log-likelihood is within
    /// one standard error of the best.
    pub one_se_rule: bool,
    pub seed: u64,
}

impl Default for DensityCvConfig {
    fn default() -> Self {
        DensityCvConfig {
            folds: None,
            grid: GridSpec::default(),
            max_passes: 5,
            one_se_rule: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bandwidths {
    /// Gaussian bandwidth, or smoothing probability for a discrete target.
    pub target: f64,
    /// Per conditioner, in the order given to the fit.
    pub conditioners: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDensityModel {
    target: Sample,
    target_index: usize,
    conditioners: Vec<Sample>,
    conditioner_indices: Vec<usize>,
    bandwidths: Bandwidths,
    smoothed_out: Vec<bool>,
    cv_log_likelihood: f64,
    passes: usize,
}

/// Choose a grid index from per-point held-out log densities.
///
/// Candidates are sorted by increasing smoothness, so later ties win.
fn choose_candidate(scores: &[Vec<f64>], one_se: bool) -> usize {
    let means: Vec<f64> = scores.iter().map(|s| crate::stats::mean(s)).collect();
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m >= means[best] {
            best = i;
        }
    }
    if one_se {
        let n = scores[best].len() as f64;
        for i in (best + 1..scores.len()).rev() {
            let diff: Vec<f64> = scores[best].iter().zip(&scores[i]).map(|(a, b)| a - b).collect();
            let se = crate::stats::ml_variance(&diff).sqrt() / n.sqrt();
            if crate::stats::mean(&diff) <= se {
                return i;
            }
        }
    }
    best
}

struct CvProblem<'a> {
    n: usize,
    fold: Vec<usize>,
    target: &'a Sample,
}

impl CvProblem<'_> {
    /// Held-out log density of every point. `row(i, buf)` fills the log
    /// conditioner weights of row `i` against every training point.
    fn point_scores(&self, h_y: f64, row: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
        let n = self.n;
        let y = &self.target.values;
        (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, i| {
                    row(i, buf);
                    let fi = self.fold[i];
                    let mut top = f64::NEG_INFINITY;
                    for m in 0..n {
                        if self.fold[m] != fi && buf[m] > top {
                            top = buf[m];
                        }
                    }
                    let (mut num, mut den) = (0.0, 0.0);
                    for m in 0..n {
                        if self.fold[m] == fi {
                            continue;
                        }
                        let w = (buf[m] - top).exp();
                        den += w;
                        num += w * target_kernel(self.target.kind, h_y, y[i], y[m]);
                    }
                    let f = if den > 0.0 { num / den } else { 0.0 };
                    f.max(DENSITY_FLOOR).ln()
                },
            )
            .collect()
    }
}

fn add_log_weights(lw: &mut [f64], n: usize, s: &Sample, h: f64, sign: f64) {
    lw.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = s.values[i];
        for (m, cell) in row.iter_mut().enumerate() {
            *cell += sign * log_weight(s.kind, h, xi, s.values[m]);
        }
    });
}

/// Fit `f(target | conditioners)` by held-out likelihood cross-validation.
pub fn fit_conditional_density(
    table: &MixedDataTable,
    target: usize,
    conditioners: &[usize],
    cfg: &DensityCvConfig,
) -> Result<ConditionalDensityModel> {
    if conditioners.is_empty() {
        return Err(Error::InvalidArgument("at least one conditioning variable is required".into()));
    }
    if conditioners.contains(&target) {
        return Err(Error::InvalidArgument("the target cannot condition on itself".into()));
    }
    let n = table.n_rows();
    if n < MIN_ROWS {
        return Err(Error::TooFewRows {
            rows: n,
            needed: MIN_ROWS,
        });
    }
    let fold = match cfg.folds {
        None => (0..n).collect(),
        Some(h) if (2..=n).contains(&h) => fold_assignment(n, h, cfg.seed),
        Some(h) => return Err(Error::InvalidArgument(format!("{h} folds for {n} rows"))),
    };
    let y = Sample::from_table(table, target);
    let xs: Vec<Sample> = conditioners.iter().map(|&j| Sample::from_table(table, j)).collect();
    let problem = CvProblem { n, fold, target: &y };

    let y_grid = cfg.grid.candidates(&y, false);
    let x_grids: Vec<Vec<f64>> = xs.iter().map(|s| cfg.grid.candidates(s, true)).collect();
    let start = |s: &Sample, grid: &[f64]| match s.kind {
        SampleKind::Continuous => silverman(&s.values),
        SampleKind::Discrete { .. } => grid[grid.len() / 2],
    };
    let mut h_y = start(&y, &y_grid);
    let mut h_x: Vec<f64> = xs.iter().zip(&x_grids).map(|(s, g)| start(s, g)).collect();

    let mut lw = vec![0.0; n * n];
    let mut passes = 0;
    let mut last_scores = Vec::new();
    for _ in 0..cfg.max_passes.max(1) {
        passes += 1;
        let mut changed = false;
        // rebuild from scratch each pass so add/subtract rounding cannot drift
        lw.iter_mut().for_each(|v| *v = 0.0);
        for (s, &h) in xs.iter().zip(&h_x) {
            add_log_weights(&mut lw, n, s, h, 1.0);
        }

        let scores: Vec<Vec<f64>> = y_grid
            .iter()
            .map(|&c| problem.point_scores(c, |i, buf| buf.copy_from_slice(&lw[i * n..(i + 1) * n])))
            .collect();
        let pick = choose_candidate(&scores, cfg.one_se_rule);
        if y_grid[pick] != h_y {
            changed = true;
            h_y = y_grid[pick];
        }
        last_scores = scores.into_iter().nth(pick).unwrap_or_default();

        for j in 0..xs.len() {
            add_log_weights(&mut lw, n, &xs[j], h_x[j], -1.0);
            let base = &lw;
            let s = &xs[j];
            let scores: Vec<Vec<f64>> = x_grids[j]
                .iter()
                .map(|&c| {
                    problem.point_scores(h_y, |i, buf| {
                        let xi = s.values[i];
                        for m in 0..n {
                            buf[m] = base[i * n + m] + log_weight(s.kind, c, xi, s.values[m]);
                        }
                    })
                })
                .collect();
            let pick = choose_candidate(&scores, cfg.one_se_rule);
            if x_grids[j][pick] != h_x[j] {
                changed = true;
                h_x[j] = x_grids[j][pick];
            }
            last_scores = scores.into_iter().nth(pick).unwrap_or_default();
            add_log_weights(&mut lw, n, &xs[j], h_x[j], 1.0);
        }
        if !changed {
            break;
        }
    }

    let smoothed_out = xs.iter().zip(&h_x).map(|(s, &h)| at_upper_bound(s.kind, h)).collect();
    Ok(ConditionalDensityModel {
        cv_log_likelihood: crate::stats::mean(&last_scores),
        target: y,
        target_index: target,
        conditioners: xs,
        conditioner_indices: conditioners.to_vec(),
        bandwidths: Bandwidths {
            target: h_y,
            conditioners: h_x,
        },
        smoothed_out,
        passes,
    })
}

impl ConditionalDensityModel {
    pub fn n(&self) -> usize {
        self.target.values.len()
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn target_kind(&self) -> SampleKind {
        self.target.kind
    }

    pub fn conditioner_indices(&self) -> &[usize] {
        &self.conditioner_indices
    }

    pub fn bandwidths(&self) -> &Bandwidths {
        &self.bandwidths
    }

    /// Per conditioner: whether its bandwidth sits at the upper search bound.
    pub fn smoothed_out(&self) -> &[bool] {
        &self.smoothed_out
    }

    pub fn all_smoothed_out(&self) -> bool {
        self.smoothed_out.iter().all(|&s| s)
    }

    /// Mean held-out log density at the selected bandwidths.
    pub fn cv_log_likelihood(&self) -> f64 {
        self.cv_log_likelihood
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    /// Normalised weights of every training point for conditioning value `x`.
    fn weights_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|v| *v = 0.0);
        for ((s, &h), &xj) in self.conditioners.iter().zip(&self.bandwidths.conditioners).zip(x) {
            for m in 0..n {
                out[m] += log_weight(s.kind, h, xj, s.values[m]);
            }
        }
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = (*v - top).exp();
            total += *v;
        }
        for v in out.iter_mut() {
            *v /= total;
        }
    }

    fn conditioning_row(&self, row: usize) -> Vec<f64> {
        self.conditioners.iter().map(|s| s.values[row]).collect()
    }

    fn mix(&self, weights: &[f64], y: f64) -> f64 {
        let h = self.bandwidths.target;
        weights
            .iter()
            .zip(&self.target.values)
            .map(|(&w, &yi)| if w == 0.0 { 0.0 } else { w * target_kernel(self.target.kind, h, y, yi) })
            .sum()
    }

    /// `f(y | x)`; `x` holds one value per conditioner, in fit order.
    pub fn conditional_density(&self, y: f64, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.conditioners.len(), "one value per conditioner");
        let mut w = vec![0.0; self.n()];
        self.weights_into(x, &mut w);
        self.mix(&w, y)
    }

    /// Plain kernel estimate of the target's marginal density.
    pub fn marginal_kde(&self, y: f64) -> f64 {
        let h = self.bandwidths.target;
        self.target
            .values
            .iter()
            .map(|&yi| target_kernel(self.target.kind, h, y, yi))
            .sum::<f64>()
            / self.n() as f64
    }

    /// Model-implied marginal: the equal mixture of `f(y | x_n)` over rows.
    pub fn mixture_marginal(&self) -> MixtureMarginal {
        let n = self.n();
        let mut weights = vec![0.0; n];
        if self.all_smoothed_out() {
            weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        } else {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map_init(
                    || vec![0.0; n],
                    |buf, r| {
                        self.weights_into(&self.conditioning_row(r), buf);
                        buf.clone()
                    },
                )
                .collect();
            for row in &rows {
                for (w, a) in weights.iter_mut().zip(row) {
                    *w += a / n as f64;
                }
            }
        }
        MixtureMarginal {
            kind: self.target.kind,
            bandwidth: self.bandwidths.target,
            support: self.target.values.clone(),
            weights,
        }
    }
}

/// A weighted kernel density over the target's training values.
#[derive(Debug, Clone)]
pub struct MixtureMarginal {
    kind: SampleKind,
    bandwidth: f64,
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl MixtureMarginal {
    pub fn density(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.support)
            .map(|(&w, &yi)| w * target_kernel(self.kind, self.bandwidth, y, yi))
            .sum()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Sample estimates of the two divergences between the joint law of
/// `(Y, X)` and the product of its marginals under the fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    /// `mean_n ln f(y_n|x_n) / f(y_n)`: the mutual information.
    pub forward: f64,
    /// Mean of `ln f(y_m) / f(y_m|x_n)` over pairs with `m != n`.
    pub reverse: f64,
    /// `max(forward + reverse, 0)`.
    pub symmetric: f64,
    /// `max(2 forward, 0)`.
    pub twice_mi: f64,
    /// Density evaluations raised to the floor.
    pub floored: usize,
}

pub const MAX_REVERSE_PARTNERS: usize = 200;

/// Estimate the symmetric divergence between `f(y)` and `f(y | x)`.
///
/// The reverse term pairs each row's conditioning value with up to
/// [`MAX_REVERSE_PARTNERS`] other rows' targets, chosen at evenly spaced
/// offsets so the result is deterministic.
pub fn symmetric_kl(model: &ConditionalDensityModel) -> KlEstimate {
    let n = model.n();
    if model.all_smoothed_out() {
        return KlEstimate {
            forward: 0.0,
            reverse: 0.0,
            symmetric: 0.0,
            twice_mi: 0.0,
            floored: 0,
        };
    }
    let marginal = model.mixture_marginal();
    let y = &model.target.values;
    let marg_at: Vec<f64> = y.par_iter().map(|&v| marginal.density(v)).collect();
    let partners = MAX_REVERSE_PARTNERS.min(n - 1);

    let per_row: Vec<(f64, f64, usize)> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |w, r| {
                let mut floored = 0;
                let mut safe_ln = |v: f64| {
                    if v < DENSITY_FLOOR {
                        floored += 1;
                        DENSITY_FLOOR.ln()
                    } else {
                        v.ln()
                    }
                };
                model.weights_into(&model.conditioning_row(r), w);
                let fwd = safe_ln(model.mix(w, y[r])) - safe_ln(marg_at[r]);
                let mut rev = 0.0;
                for s in 0..partners {
                    let m = (r + 1 + s * (n - 1) / partners) % n;
                    rev += safe_ln(marg_at[m]) - safe_ln(model.mix(w, y[m]));
                }
                (fwd, rev, floored)
            },
        )
        .collect();

    let forward = per_row.iter().map(|t| t.0).sum::<f64>() / n as f64;
    let reverse = if partners == 0 {
        0.0
    } else {
        per_row.iter().map(|t| t.1).sum::<f64>() / (n * partners) as f64
    };
    KlEstimate {
        forward,
        reverse,
        symmetric: (forward + reverse).max(0.0),
        twice_mi: (2.0 * forward).max(0.0),
        floored: per_row.iter().map(|t| t.2).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcScore {
    pub k: usize,
    pub n_vars: usize,
    pub symmetric_kl: f64,
    pub twice_mi: f64,
    pub ec: f64,
    pub ecd: f64,
    pub floored_densities: usize,
}

/// `(ec, ecd)` for a divergence spread over `n_vars` variables.
pub fn ec_from_kl(kl: f64, n_vars: usize) -> (f64, f64) {
    let ec = kl / n_vars as f64;
    (ec, ec / (ec + 1.0))
}

/// Entropy coefficient of path-step `k`.
pub fn ec_score(model: &ConditionalDensityModel, k: usize) -> Result<EcScore> {
    let n_vars = model.conditioners.len();
    if n_vars < 2 {
        return Err(Error::SingletonPathStep(k));
    }
    let kl = symmetric_kl(model);
    let (ec, ecd) = ec_from_kl(kl.symmetric, n_vars);
    Ok(EcScore {
        k,
        n_vars,
        symmetric_kl: kl.symmetric,
        twice_mi: kl.twice_mi,
        ec,
        ecd,
        floored_densities: kl.floored,
    })
}

/// One row of an emitted density curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub y: f64,
    /// Plain kernel estimate of the target's density.
    pub marginal: f64,
    /// Model-implied density given the conditioners.
    pub conditional: f64,
}

/// Both density estimates on an even grid over `[min - 3h, max + 3h]`, or
/// at every level for a discrete target.
pub fn density_curve(model: &ConditionalDensityModel, points: usize) -> Vec<CurvePoint> {
    let mixture = model.mixture_marginal();
    let grid: Vec<f64> = match model.target.kind {
        SampleKind::Discrete { levels } => (0..levels).map(|l| l as f64).collect(),
        SampleKind::Continuous => {
            let h = model.bandwidths.target;
            let lo = model.target.values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
            let hi = model.target.values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
            let m = points.max(2);
            (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
        }
    };
    grid.into_iter()
        .map(|y| CurvePoint {
            y,
            marginal: model.marginal_kde(y),
            conditional: mixture.density(y),
        })
        .collect()
}

pub fn write_density_curve_csv<W: std::io::Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y", "f_marginal", "f_conditional"])?;
    for p in curve {
        w.write_record([
            crate::format::real(p.y),
            crate::format::real(p.marginal),
            crate::format::real(p.conditional),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
