//! Pairwise mutual information in nats with penalised edge weights.
//!
//! Four pair types are handled: discrete/discrete (contingency deviance),
//! continuous/continuous (Gaussian correlation), and discrete/continuous
//! under either a common or a per-level variance. In every case `2 * mi` is
//! the likelihood-ratio deviance of the independence test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{group_stats_raw, tabulate_codes, CellCounts, Column, GroupStats, MixedDataTable};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    #[default]
    Homogeneous,
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    #[default]
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    DD,
    CC,
    MixHom,
    MixHet,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::DD => "DD",
            PairKind::CC => "CC",
            PairKind::MixHom => "MixHom",
            PairKind::MixHet => "MixHet",
        }
    }
}

/// Data-quality notes attached to an individual pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFlag {
    /// A declared level was never observed and was collapsed out.
    ZeroMargin,
    /// Perfect dependence; the edge carries an infinite weight.
    DegenerateCorrelation,
    /// One side is constant; the pair carries no information.
    ConstantColumn,
    /// A level had zero variance, so the common-variance formula was used.
    DegenerateGroupVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMi {
    pub mi: f64,
    pub df: u32,
    pub flags: Vec<EdgeFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScore {
    pub u: usize,
    pub v: usize,
    pub kind: PairKind,
    pub mi: f64,
    pub df: u32,
    pub weight_aic: f64,
    pub weight_bic: f64,
    pub p_value: f64,
    pub flags: Vec<EdgeFlag>,
}

impl EdgeScore {
    pub fn new(u: usize, v: usize, kind: PairKind, pair: PairMi, n: usize) -> Self {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let df = pair.df as f64;
        let lr = lr_test(pair.mi, pair.df);
        EdgeScore {
            u,
            v,
            kind,
            mi: pair.mi,
            df: pair.df,
            weight_aic: pair.mi - 2.0 * df,
            weight_bic: pair.mi - (n as f64).ln() * df,
            p_value: lr.p_value,
            flags: pair.flags,
        }
    }

    pub fn weight(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Aic => self.weight_aic,
            Criterion::Bic => self.weight_bic,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.mi == f64::INFINITY
    }
}

/// Contingency-table MI: `sum n_ij ln(n_ij n / (n_i n_j))`.
pub fn discrete_pair_mi(counts: &CellCounts) -> Result<PairMi> {
    let n = counts.total;
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    let mut mi = 0.0;
    for i in 0..counts.rows {
        let ri = counts.row_margins[i];
        if ri == 0 {
            continue;
        }
        for j in 0..counts.cols {
            let c = counts.get(i, j);
            if c == 0 {
                continue;
            }
            let cj = counts.col_margins[j];
            // exact integer ratio, so independent cells give ln(1) = 0
            let ratio = (c as u128 * n as u128) as f64 / (ri as u128 * cj as u128) as f64;
            mi += c as f64 * ratio.ln();
        }
    }
    let obs_rows = counts.row_margins.iter().filter(|&&m| m > 0).count();
    let obs_cols = counts.col_margins.iter().filter(|&&m| m > 0).count();
    let mut flags = Vec::new();
    if obs_rows < counts.rows || obs_cols < counts.cols {
        flags.push(EdgeFlag::ZeroMargin);
    }
    Ok(PairMi {
        mi: mi.max(0.0),
        df: positive_df((obs_rows.saturating_sub(1) * obs_cols.saturating_sub(1)) as u32, &mut flags),
        flags,
    })
}

/// A pair whose observed parameter count is zero involves a constant
/// variable. It keeps one degree of freedom so its penalised weight is
/// negative and it can never enter a forest.
fn positive_df(df: u32, flags: &mut Vec<EdgeFlag>) -> u32 {
    if df == 0 {
        flags.push(EdgeFlag::ConstantColumn);
        1
    } else {
        df
    }
}

const PERFECT_CORRELATION_TOL: f64 = 1e-12;

/// Gaussian MI from the sample correlation: `-(N/2) ln(1 - r^2)`.
pub fn gaussian_pair_mi(x: &[f64], y: &[f64]) -> Result<PairMi> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("vectors differ in length".into()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewRows {
            rows: x.len(),
            needed: 3,
        });
    }
    let r = stats::pearson(x, y).ok_or_else(|| Error::ConstantColumn("<pair>".into()))?;
    if 1.0 - r.abs() <= PERFECT_CORRELATION_TOL {
        return Ok(PairMi {
            mi: f64::INFINITY,
            df: 1,
            flags: vec![EdgeFlag::DegenerateCorrelation],
        });
    }
    let n = x.len() as f64;
    Ok(PairMi {
        mi: (-0.5 * n * (-r * r).ln_1p()).max(0.0),
        df: 1,
        flags: Vec::new(),
    })
}

/// Discrete/continuous MI from per-level moments.
///
/// Levels with no observations are ignored. In heterogeneous mode a level
/// with zero variance makes the per-level likelihood unbounded, so the pair
/// falls back to the homogeneous formula and is flagged.
pub fn mixed_pair_mi(stats: &GroupStats, mode: VarianceMode) -> Result<(PairMi, PairKind)> {
    if stats.s0 <= 0.0 {
        return Err(Error::ConstantColumn("<continuous side>".into()));
    }
    let n = stats.n as f64;
    let observed: Vec<_> = stats.groups.iter().filter(|g| g.n > 0).collect();
    let levels = observed.len() as u32;
    let mut flags = Vec::new();
    if stats.has_empty_group {
        flags.push(EdgeFlag::ZeroMargin);
    }

    let heterogeneous = match mode {
        VarianceMode::Homogeneous => false,
        VarianceMode::Heterogeneous if observed.iter().any(|g| g.var <= 0.0) => {
            flags.push(EdgeFlag::DegenerateGroupVariance);
            false
        }
        VarianceMode::Heterogeneous => true,
    };

    if heterogeneous {
        let within: f64 = observed.iter().map(|g| g.n as f64 * g.var.ln()).sum();
        let mi = 0.5 * n * stats.s0.ln() - 0.5 * within;
        let df = positive_df(2 * levels.saturating_sub(1), &mut flags);
        return Ok((PairMi { mi: mi.max(0.0), df, flags }, PairKind::MixHet));
    }

    let s: f64 = observed.iter().map(|g| g.n as f64 * g.var).sum::<f64>() / n;
    let df = positive_df(levels.saturating_sub(1), &mut flags);
    if s <= 0.0 {
        flags.push(EdgeFlag::DegenerateCorrelation);
        return Ok((
            PairMi {
                mi: f64::INFINITY,
                df,
                flags,
            },
            PairKind::MixHom,
        ));
    }
    let mi = 0.5 * n * (stats.s0 / s).ln();
    Ok((PairMi { mi: mi.max(0.0), df, flags }, PairKind::MixHom))
}

/// Score one pair of columns. Errors that only reflect uninformative data
/// (constant columns) are turned into a flagged zero-information score.
pub fn pair_score(table: &MixedDataTable, u: usize, v: usize, mode: VarianceMode) -> Result<EdgeScore> {
    let n = table.n_rows();
    let (kind, pair) = match (table.column(u), table.column(v)) {
        (Column::Discrete(a), Column::Discrete(b)) => {
            let ra = table.spec(u).kind.n_levels().unwrap_or(0);
            let rb = table.spec(v).kind.n_levels().unwrap_or(0);
            (PairKind::DD, discrete_pair_mi(&tabulate_codes(a, b, ra, rb))?)
        }
        (Column::Continuous(a), Column::Continuous(b)) => (PairKind::CC, gaussian_pair_mi(a, b).or_else(constant_pair)?),
        (Column::Discrete(codes), Column::Continuous(vals)) | (Column::Continuous(vals), Column::Discrete(codes)) => {
            let d = if table.is_discrete(u) { u } else { v };
            let levels = table.spec(d).kind.n_levels().unwrap_or(0);
            let g = group_stats_raw(codes, vals, levels);
            let fallback_kind = match mode {
                VarianceMode::Homogeneous => PairKind::MixHom,
                VarianceMode::Heterogeneous => PairKind::MixHet,
            };
            match mixed_pair_mi(&g, mode) {
                Ok((pair, kind)) => (kind, pair),
                Err(e) => (fallback_kind, constant_pair(e)?),
            }
        }
    };
    Ok(EdgeScore::new(u, v, kind, pair, n))
}

fn constant_pair(e: Error) -> Result<PairMi> {
    match e {
        Error::ConstantColumn(_) => Ok(PairMi {
            mi: 0.0,
            df: 1,
            flags: vec![EdgeFlag::ConstantColumn],
        }),
        other => Err(other),
    }
}

/// Scores for every pair `u < v`, ordered by `(u, v)`.
pub fn all_pairwise_scores(table: &MixedDataTable, mode: VarianceMode) -> Result<Vec<EdgeScore>> {
    let p = table.n_vars();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|u| (u + 1..p).map(move |v| (u, v))).collect();
    pairs
        .par_iter()
        .map(|&(u, v)| pair_score(table, u, v, mode))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Likelihood-ratio test of independence: statistic `2 mi` against chi-square.
pub fn lr_test(mi: f64, df: u32) -> LrTest {
    let statistic = 2.0 * mi;
    LrTest {
        statistic,
        p_value: stats::chi2_upper_tail(statistic, df.max(1) as f64),
    }
}

/// Write scores as CSV with columns `u,v,kind,mi,df,weight_aic,weight_bic,p_value`.
pub fn write_edge_scores_csv<W: std::io::Write>(
    scores: &[EdgeScore],
    table: &MixedDataTable,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "v", "kind", "mi", "df", "weight_aic", "weight_bic", "p_value"])?;
    for s in scores {
        w.write_record([
            table.name(s.u).to_string(),
            table.name(s.v).to_string(),
            s.kind.as_str().to_string(),
            crate::format::real(s.mi),
            s.df.to_string(),
            crate::format::real(s.weight_aic),
            crate::format::real(s.weight_bic),
            crate::format::real(s.p_value),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
