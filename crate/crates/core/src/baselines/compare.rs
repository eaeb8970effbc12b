//! Repeated train/test comparison of the selected OLS model against a baseline.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::enet::{elastic_net_fit, elastic_net_fit_from, lambda1_max, ElasticNetOptions};
use super::varrank::{varrank_select, VarrankScheme};
use crate::bpa::SelectionReport;
use crate::data::MixedDataTable;
use crate::error::{Error, Result};
use crate::format::real;
use crate::linear::{design_terms, regress, Term};
use crate::rng::{derive_seed, fold_assignment, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Enet,
    Varrank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareConfig {
    pub baseline: Baseline,
    pub train_frac: f64,
    pub repeats: usize,
    pub seed: u64,
    pub cv_folds: usize,
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of the largest.
    pub lambda_ratio: f64,
    /// Values of `l2 / (l1 + l2)` searched alongside the grid.
    pub alphas: Vec<f64>,
    pub varrank_scheme: VarrankScheme,
    pub enet: ElasticNetOptions,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            baseline: Baseline::Enet,
            train_frac: 0.7,
            repeats: 100,
            seed: 0,
            cv_folds: 10,
            n_lambda: 50,
            lambda_ratio: 1e-3,
            alphas: vec![0.25, 0.5, 0.75],
            varrank_scheme: VarrankScheme::Mid,
            enet: ElasticNetOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub mse_bpa: f64,
    pub mse_baseline: f64,
    /// Tuned penalties, elastic net only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Non-zero coefficients of the tuned elastic net.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonzero: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub target: String,
    pub baseline: Baseline,
    pub bpa_variables: Vec<String>,
    /// The baseline's variables when it uses a fixed set.
    pub baseline_variables: Vec<String>,
    pub repeats: Vec<RepeatResult>,
    /// Repeats where the selected model's test MSE is strictly lower.
    pub wins: usize,
    pub ties: usize,
    pub win_rate: f64,
    pub median_mse_bpa: f64,
    pub median_mse_baseline: f64,
    pub config: CompareConfig,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn ols_test_mse(table: &MixedDataTable, target: usize, vars: &[usize], train: &[usize], test: &[usize]) -> Result<f64> {
    let y = table.reals(target)?;
    let model = regress(table, target, vars, Some(train))?;
    Ok(test.iter().map(|&r| (y[r] - model.predict(table, r)).powi(2)).sum::<f64>() / test.len() as f64)
}

/// Column centring and scaling learnt on training rows.
struct Scaler {
    mean: Vec<f64>,
    sd: Vec<f64>,
    y_mean: f64,
    y_sd: f64,
}

fn raw_design(table: &MixedDataTable, terms: &[Term], rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), terms.len(), |i, j| terms[j].value(table, rows[i]))
}

impl Scaler {
    fn fit(x: &DMatrix<f64>, y: &[f64]) -> Self {
        let n = y.len() as f64;
        let moments = |v: &mut dyn Iterator<Item = f64>| {
            let vals: Vec<f64> = v.collect();
            let m = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n;
            (m, var.sqrt())
        };
        let (mean, sd): (Vec<f64>, Vec<f64>) = x.column_iter().map(|c| moments(&mut c.iter().copied())).unzip();
        let (y_mean, y_sd) = moments(&mut y.iter().copied());
        Scaler { mean, sd, y_mean, y_sd }
    }

    /// Constant columns become zero and drop out of the fit.
    fn x(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.sd[j] > 0.0 {
                (x[(i, j)] - self.mean[j]) / self.sd[j]
            } else {
                0.0
            }
        })
    }

    fn y(&self, y: &[f64]) -> Vec<f64> {
        let sd = if self.y_sd > 0.0 { self.y_sd } else { 1.0 };
        y.iter().map(|v| (v - self.y_mean) / sd).collect()
    }

    fn predict(&self, xs: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
        let sd = if self.y_sd > 0.0 { self.y_sd } else { 1.0 };
        (0..xs.nrows())
            .map(|i| self.y_mean + sd * (0..xs.ncols()).map(|j| xs[(i, j)] * beta[j]).sum::<f64>())
            .collect()
    }
}

fn rows_of(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

struct Tuned {
    lambda1: f64,
    alpha: f64,
}

/// Grid search over `(alpha, l1)` by K-fold CV on standardized training data.
fn tune_enet(xs: &DMatrix<f64>, ys: &[f64], cfg: &CompareConfig, seed: u64) -> Result<Tuned> {
    let n = ys.len();
    let lmax = lambda1_max(xs, ys);
    if lmax == 0.0 {
        return Ok(Tuned { lambda1: 0.0, alpha: cfg.alphas[0] });
    }
    let grid: Vec<f64> = (0..cfg.n_lambda)
        .map(|i| {
            let t = if cfg.n_lambda > 1 { i as f64 / (cfg.n_lambda - 1) as f64 } else { 0.0 };
            lmax * cfg.lambda_ratio.powf(t)
        })
        .collect();
    let fold = fold_assignment(n, cfg.cv_folds, seed);
    let mut cv = vec![0.0; cfg.alphas.len() * grid.len()];
    for f in 0..cfg.cv_folds {
        let train: Vec<usize> = (0..n).filter(|&r| fold[r] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&r| fold[r] == f).collect();
        if test.is_empty() {
            continue;
        }
        let (xt, xv) = (rows_of(xs, &train), rows_of(xs, &test));
        let yt: Vec<f64> = train.iter().map(|&r| ys[r]).collect();
        for (a, &alpha) in cfg.alphas.iter().enumerate() {
            // walk the grid from the largest penalty, warm-starting each fit
            let mut start: Option<Vec<f64>> = None;
            for (l, &l1) in grid.iter().enumerate() {
                let l2 = l1 * alpha / (1.0 - alpha);
                let fit = elastic_net_fit_from(&xt, &yt, l1, l2, &cfg.enet, start.as_deref())?;
                let sse: f64 = test
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| {
                        let p: f64 = (0..xv.ncols()).map(|j| xv[(i, j)] * fit.coefficients[j]).sum();
                        (ys[r] - p).powi(2)
                    })
                    .sum();
                cv[a * grid.len() + l] += sse;
                start = Some(fit.coefficients);
            }
        }
    }
    let best = cv
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc })
        .0;
    Ok(Tuned {
        lambda1: grid[best % grid.len()],
        alpha: cfg.alphas[best / grid.len()],
    })
}

/// Split rows for one repeat. The split depends only on the seed and repeat index.
pub fn split_rows(n: usize, train_frac: f64, seed: u64, repeat: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(derive_seed(seed, 7), repeat as u64));
    let n_train = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn validate(cfg: &CompareConfig, n: usize) -> Result<()> {
    if !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(Error::InvalidArgument("train fraction must lie in (0, 1)".into()));
    }
    if cfg.repeats == 0 {
        return Err(Error::InvalidArgument("at least one repeat is required".into()));
    }
    if cfg.cv_folds < 2 || cfg.n_lambda == 0 {
        return Err(Error::InvalidArgument("need two or more folds and a non-empty grid".into()));
    }
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|&a| !(0.0..1.0).contains(&a)) {
        return Err(Error::InvalidArgument("alphas must lie in [0, 1)".into()));
    }
    if n < 4 {
        return Err(Error::TooFewRows { rows: n, needed: 4 });
    }
    Ok(())
}

/// Compare the report's pruned set against the configured baseline.
pub fn compare_predictions(table: &MixedDataTable, report: &SelectionReport, cfg: &CompareConfig) -> Result<Comparison> {
    let n = table.n_rows();
    validate(cfg, n)?;
    let y = report.target_index;
    let bpa_vars = report.m_wf_index.clone();
    let others: Vec<usize> = (0..table.n_vars()).filter(|&j| j != y).collect();
    let varrank_vars = match cfg.baseline {
        Baseline::Varrank => {
            let m = bpa_vars.len().clamp(1, others.len());
            varrank_select(table, &report.target, m, cfg.varrank_scheme)?.selected_index
        }
        Baseline::Enet => Vec::new(),
    };
    let ys = table.reals(y)?;
    let repeats: Vec<RepeatResult> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let (train, test) = split_rows(n, cfg.train_frac, cfg.seed, r);
            let mse_bpa = ols_test_mse(table, y, &bpa_vars, &train, &test)?;
            match cfg.baseline {
                Baseline::Varrank => Ok(RepeatResult {
                    repeat: r,
                    mse_bpa,
                    mse_baseline: ols_test_mse(table, y, &varrank_vars, &train, &test)?,
                    lambda1: None,
                    alpha: None,
                    nonzero: None,
                }),
                Baseline::Enet => {
                    let terms = design_terms(table, &others, &train);
                    let xt = raw_design(table, &terms, &train);
                    let yt: Vec<f64> = train.iter().map(|&i| ys[i]).collect();
                    let scaler = Scaler::fit(&xt, &yt);
                    let (xs, yss) = (scaler.x(&xt), scaler.y(&yt));
                    let tuned = tune_enet(&xs, &yss, cfg, derive_seed(cfg.seed, 1_000 + r as u64))?;
                    let l2 = tuned.lambda1 * tuned.alpha / (1.0 - tuned.alpha);
                    let fit = elastic_net_fit(&xs, &yss, tuned.lambda1, l2, &cfg.enet)?;
                    let xv = scaler.x(&raw_design(table, &terms, &test));
                    let pred = scaler.predict(&xv, &fit.coefficients);
                    let mse = test.iter().zip(&pred).map(|(&i, p)| (ys[i] - p).powi(2)).sum::<f64>() / test.len() as f64;
                    Ok(RepeatResult {
                        repeat: r,
                        mse_bpa,
                        mse_baseline: mse,
                        lambda1: Some(tuned.lambda1),
                        alpha: Some(tuned.alpha),
                        nonzero: Some(fit.coefficients.iter().filter(|&&b| b != 0.0).count()),
                    })
                }
            }
        })
        .collect::<Result<_>>()?;
    let wins = repeats.iter().filter(|r| r.mse_bpa < r.mse_baseline).count();
    let ties = repeats.iter().filter(|r| r.mse_bpa == r.mse_baseline).count();
    let a: Vec<f64> = repeats.iter().map(|r| r.mse_bpa).collect();
    let b: Vec<f64> = repeats.iter().map(|r| r.mse_baseline).collect();
    let names = |v: &[usize]| v.iter().map(|&j| table.name(j).to_string()).collect::<Vec<_>>();
    Ok(Comparison {
        target: report.target.clone(),
        baseline: cfg.baseline,
        bpa_variables: names(&bpa_vars),
        baseline_variables: names(&varrank_vars),
        wins,
        ties,
        win_rate: wins as f64 / cfg.repeats as f64,
        median_mse_bpa: median(&a),
        median_mse_baseline: median(&b),
        repeats,
        config: cfg.clone(),
    })
}

/// Per-repeat table: `repeat,mse_bpa,mse_<baseline>`.
pub fn write_comparison_csv<W: std::io::Write>(cmp: &Comparison, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let label = match cmp.baseline {
        Baseline::Enet => "mse_enet",
        Baseline::Varrank => "mse_varrank",
    };
    w.write_record(["repeat", "mse_bpa", label])?;
    for r in &cmp.repeats {
        w.write_record([r.repeat.to_string(), real(r.mse_bpa), real(r.mse_baseline)])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
