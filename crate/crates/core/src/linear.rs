//! Ordinary least squares with t-tests, adjusted R², k-fold cross-validated
//! MSE and t-test pruning.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Column, MixedDataTable};
use crate::error::{Error, Result};
use crate::rng::fold_assignment;
use crate::stats::t_two_sided;

/// Relative size below which a diagonal entry of R marks a dependent column.
const RANK_TOL: f64 = 1e-10;

/// One design column: a continuous variable, or a dummy for one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub variable: usize,
    pub name: String,
    /// Level code for a dummy column.
    pub level: Option<u32>,
}

impl Term {
    /// This term's design value on one row.
    pub fn value(&self, table: &MixedDataTable, row: usize) -> f64 {
        match (table.column(self.variable), self.level) {
            (Column::Continuous(v), _) => v[row],
            (Column::Discrete(c), Some(l)) => f64::from(u8::from(c[row] == l)),
            (Column::Discrete(_), None) => unreachable!("discrete terms carry a level"),
        }
    }
}

/// Design columns for `regressors`: continuous variables as-is, discrete
/// variables as dummies for every level but the first. Dummies that are
/// identically zero on `rows` are left out.
pub fn design_terms(table: &MixedDataTable, regressors: &[usize], rows: &[usize]) -> Vec<Term> {
    let mut terms = Vec::new();
    for &j in regressors {
        let spec = table.spec(j);
        match table.column(j) {
            Column::Continuous(_) => terms.push(Term {
                variable: j,
                name: spec.name.clone(),
                level: None,
            }),
            Column::Discrete(codes) => {
                let levels = match &spec.kind {
                    crate::data::VariableKind::Discrete { levels } => levels,
                    _ => unreachable!(),
                };
                for (l, label) in levels.iter().enumerate().skip(1) {
                    if rows.iter().any(|&r| codes[r] == l as u32) {
                        terms.push(Term {
                            variable: j,
                            name: format!("{}={}", spec.name, label),
                            level: Some(l as u32),
                        });
                    }
                }
            }
        }
    }
    terms
}

/// Design matrix with a leading intercept column.
pub fn design_matrix(table: &MixedDataTable, terms: &[Term], rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), terms.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            terms[j - 1].value(table, rows[i])
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    /// Column names, starting with `(Intercept)`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub residual_variance: f64,
    pub rss: f64,
    pub n: usize,
    pub p_used: usize,
}

impl OlsFit {
    pub fn df_resid(&self) -> usize {
        self.n - self.p_used - 1
    }

    /// In-sample mean squared error, `RSS / n`.
    pub fn mse(&self) -> f64 {
        self.rss / self.n as f64
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    /// A plain-text coefficient table.
    pub fn summary_table(&self) -> String {
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(11);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$} {:>12} {:>12} {:>9} {:>10}",
            "", "Estimate", "Std. Error", "t value", "Pr(>|t|)"
        );
        for i in 0..self.names.len() {
            let _ = writeln!(
                s,
                "{:<width$} {:>12.5} {:>12.5} {:>9.3} {:>10.4e}",
                self.names[i], self.coefficients[i], self.std_errors[i], self.t_values[i], self.p_values[i]
            );
        }
        let _ = writeln!(
            s,
            "\nResidual standard error: {:.4} on {} degrees of freedom",
            self.residual_variance.sqrt(),
            self.df_resid()
        );
        let _ = writeln!(s, "R-squared: {:.4}, adjusted R-squared: {:.4}", self.r2, self.adj_r2);
        s
    }
}

/// Least squares through a Householder QR decomposition.
///
/// `x` must include the intercept column. A column whose diagonal entry
/// in R is negligible depends linearly on the columns before it and is
/// reported.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<OlsFit> {
    let (n, cols) = x.shape();
    assert_eq!(names.len(), cols, "one name per design column");
    if y.len() != n {
        return Err(Error::InvalidArgument("response length differs from the design".into()));
    }
    let p_used = cols - 1;
    if n <= p_used + 1 {
        return Err(Error::TooFewRows {
            rows: n,
            needed: p_used + 2,
        });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..cols)
        .map(|j| x.column(j).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for j in 0..cols {
        if r[(j, j)].abs() <= RANK_TOL * scale {
            return Err(Error::RankDeficient(names[j].clone()));
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let resid = &yv - x * &beta;
    let rss = resid.norm_squared();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if tss == 0.0 {
        return Err(Error::ConstantColumn("<response>".into()));
    }
    let df = (n - p_used - 1) as f64;
    let sigma2 = rss / df;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or_else(|| Error::Numerical("triangular inverse failed".into()))?;
    let mut std_errors = Vec::with_capacity(cols);
    let mut t_values = Vec::with_capacity(cols);
    let mut p_values = Vec::with_capacity(cols);
    for j in 0..cols {
        let se = (sigma2 * r_inv.row(j).norm_squared()).sqrt();
        let t = beta[j] / se;
        let t = if t.is_nan() { 0.0 } else { t };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(t_two_sided(t, df));
    }
    let r2 = 1.0 - rss / tss;
    Ok(OlsFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_values,
        p_values,
        r2,
        adj_r2: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df,
        residual_variance: sigma2,
        rss,
        n,
        p_used,
    })
}

/// An OLS fit of a table column on a set of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regression {
    pub target: usize,
    pub regressors: Vec<usize>,
    pub terms: Vec<Term>,
    pub fit: OlsFit,
}

impl Regression {
    pub fn predict(&self, table: &MixedDataTable, row: usize) -> f64 {
        let x: Vec<f64> = self.terms.iter().map(|t| t.value(table, row)).collect();
        self.fit.predict_row(&x)
    }
}

fn term_names(terms: &[Term]) -> Vec<String> {
    std::iter::once("(Intercept)".to_string())
        .chain(terms.iter().map(|t| t.name.clone()))
        .collect()
}

/// Regress `target` on `regressors` using `rows` (all rows when `None`).
pub fn regress(table: &MixedDataTable, target: usize, regressors: &[usize], rows: Option<&[usize]>) -> Result<Regression> {
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..table.n_rows()).collect();
            &all
        }
    };
    let yall = table.reals(target)?;
    let terms = design_terms(table, regressors, rows);
    let x = design_matrix(table, &terms, rows);
    let y: Vec<f64> = rows.iter().map(|&r| yall[r]).collect();
    let fit = ols_fit(&x, &y, &term_names(&terms))?;
    Ok(Regression {
        target,
        regressors: regressors.to_vec(),
        terms,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub folds: usize,
    pub fold_mse: Vec<f64>,
    pub mean_mse: f64,
    pub seed: u64,
}

/// Mean squared prediction error over `h` seeded folds.
pub fn kfold_cv_mse(table: &MixedDataTable, target: usize, regressors: &[usize], h: usize, seed: u64) -> Result<CvResult> {
    let n = table.n_rows();
    if !(2..=n).contains(&h) {
        return Err(Error::InvalidArgument(format!("{h} folds for {n} rows")));
    }
    let fold = fold_assignment(n, h, seed);
    let y = table.reals(target)?;
    let params = design_terms(table, regressors, &(0..n).collect::<Vec<_>>()).len() + 1;
    let fold_mse = (0..h)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&r| fold[r] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&r| fold[r] == f).collect();
            if test.is_empty() || train.len() < params + 1 {
                return Err(Error::FoldTooSmall {
                    size: train.len().min(test.len()),
                    params,
                });
            }
            let model = regress(table, target, regressors, Some(&train))?;
            let sse: f64 = test.iter().map(|&r| (y[r] - model.predict(table, r)).powi(2)).sum();
            Ok(sse / test.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvResult {
        folds: h,
        mean_mse: fold_mse.iter().sum::<f64>() / h as f64,
        fold_mse,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    /// Drop every non-significant variable at once, then refit.
    #[default]
    Simultaneous,
    /// Repeatedly drop the least significant variable and refit.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermTest {
    pub name: String,
    pub variable: usize,
    pub t_value: f64,
    pub p_value: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pruned {
    pub survivors: Vec<usize>,
    /// Term tests from the fit that was pruned.
    pub tests: Vec<TermTest>,
    /// Fit on the survivors; `None` when nothing survived.
    pub refit: Option<Regression>,
}

/// Smallest p-value among a variable's terms (several for a dummy block).
fn variable_p_values(reg: &Regression) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (t, term) in reg.terms.iter().enumerate() {
        let p = reg.fit.p_values[t + 1];
        match out.iter_mut().find(|(v, _)| *v == term.variable) {
            Some(entry) => entry.1 = entry.1.min(p),
            None => out.push((term.variable, p)),
        }
    }
    out
}

/// Keep the variables whose t-test (any dummy, for a factor) has `p <= alpha`.
pub fn prune_by_ttest(table: &MixedDataTable, reg: &Regression, alpha: f64, mode: PruneMode) -> Result<Pruned> {
    let keep = |r: &Regression| -> Vec<usize> {
        variable_p_values(r)
            .into_iter()
            .filter(|&(_, p)| p <= alpha)
            .map(|(v, _)| v)
            .collect()
    };
    let survivors = match mode {
        PruneMode::Simultaneous => keep(reg),
        PruneMode::Backward => {
            let mut current = reg.clone();
            loop {
                let worst = variable_p_values(&current)
                    .into_iter()
                    .filter(|&(_, p)| p > alpha)
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    None => break current.regressors.clone(),
                    Some((v, _)) => {
                        let rest: Vec<usize> = current.regressors.iter().copied().filter(|&r| r != v).collect();
                        if rest.is_empty() {
                            break rest;
                        }
                        current = regress(table, reg.target, &rest, None)?;
                    }
                }
            }
        }
    };
    let tests = reg
        .terms
        .iter()
        .enumerate()
        .map(|(t, term)| TermTest {
            name: term.name.clone(),
            variable: term.variable,
            t_value: reg.fit.t_values[t + 1],
            p_value: reg.fit.p_values[t + 1],
            kept: survivors.contains(&term.variable),
        })
        .collect();
    let survivors: Vec<usize> = reg.regressors.iter().copied().filter(|v| survivors.contains(v)).collect();
    let refit = if survivors.is_empty() {
        None
    } else {
        Some(regress(table, reg.target, &survivors, None)?)
    };
    Ok(Pruned { survivors, tests, refit })
}
