//! Greedy relevance/redundancy ranking with normalized-MIFS weights.
//!
//! Continuous variables are discretized into equal-frequency bins so that
//! every entropy and mutual information is a plug-in estimate on counts.

use serde::Serialize;

use crate::data::{tabulate_codes, Column, MixedDataTable};
use crate::error::{Error, Result};
use crate::format::real;
use crate::pairwise::discrete_pair_mi;

/// Redundancy below this is treated as zero when the quotient scheme divides by it.
const MIN_REDUNDANCY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VarrankScheme {
    /// Relevance minus mean scaled redundancy.
    #[default]
    Mid,
    /// Relevance divided by mean scaled redundancy.
    Miq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarrankRanking {
    pub scheme: VarrankScheme,
    pub target: String,
    pub selected: Vec<String>,
    pub candidates: Vec<String>,
    /// `scores[s][c]` is candidate `c`'s score at step `s`; `None` once selected.
    pub scores: Vec<Vec<Option<f64>>>,
    /// `I(x_c; target)` for each candidate.
    pub relevance: Vec<f64>,
    /// Constant variables left out of the ranking.
    pub excluded: Vec<String>,
    #[serde(skip)]
    pub selected_index: Vec<usize>,
    #[serde(skip)]
    pub candidate_index: Vec<usize>,
}

/// A column as bin codes. Discrete columns keep their codes; continuous
/// ones get `ceil(n^(1/3))` equal-frequency bins, tied values sharing a bin.
pub fn discretize(column: &Column) -> (Vec<u32>, usize) {
    match column {
        Column::Discrete(codes) => {
            let levels = codes.iter().copied().max().map_or(0, |m| m as usize + 1);
            (codes.clone(), levels)
        }
        Column::Continuous(v) => {
            let n = v.len();
            let bins = ((n as f64).cbrt().ceil() as usize).max(1);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            let mut codes = vec![0u32; n];
            let mut first = 0;
            for pos in 0..n {
                if pos > 0 && v[order[pos]] != v[order[pos - 1]] {
                    first = pos;
                }
                codes[order[pos]] = (first * bins / n) as u32;
            }
            (codes, bins)
        }
    }
}

/// Plug-in entropy in nats.
pub fn plugin_entropy(codes: &[u32], levels: usize) -> f64 {
    let mut counts = vec![0u64; levels];
    for &c in codes {
        counts[c as usize] += 1;
    }
    let n = codes.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information in nats.
pub fn plugin_mi(a: &[u32], la: usize, b: &[u32], lb: usize) -> f64 {
    let counts = tabulate_codes(a, b, la, lb);
    let n = counts.total as f64;
    discrete_pair_mi(&counts).map(|p| p.mi / n).unwrap_or(0.0)
}

/// Rank up to `m` variables for predicting `target`.
pub fn varrank_select(table: &MixedDataTable, target: &str, m: usize, scheme: VarrankScheme) -> Result<VarrankRanking> {
    let y = table.index_of(target)?;
    if m + 1 > table.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "cannot rank {m} variables out of {}",
            table.n_vars() - 1
        )));
    }
    let binned: Vec<(Vec<u32>, usize)> = (0..table.n_vars()).map(|j| discretize(table.column(j))).collect();
    let entropy: Vec<f64> = binned.iter().map(|(c, l)| plugin_entropy(c, *l)).collect();
    if entropy[y] <= 0.0 {
        return Err(Error::ConstantColumn(target.to_string()));
    }
    let mut excluded = Vec::new();
    let mut cand = Vec::new();
    for j in (0..table.n_vars()).filter(|&j| j != y) {
        if entropy[j] > 0.0 {
            cand.push(j);
        } else {
            excluded.push(table.name(j).to_string());
        }
    }
    let mi = |a: usize, b: usize| plugin_mi(&binned[a].0, binned[a].1, &binned[b].0, binned[b].1);
    let relevance: Vec<f64> = cand.iter().map(|&j| mi(j, y)).collect();
    // accumulated sum over selected s of I(x_c; x_s) / min(H_c, H_s)
    let mut redundancy = vec![0.0; cand.len()];
    let mut chosen = vec![false; cand.len()];
    let mut selected = Vec::new();
    let mut scores = Vec::new();
    for step in 0..m.min(cand.len()) {
        let row: Vec<Option<f64>> = (0..cand.len())
            .map(|c| {
                if chosen[c] {
                    return None;
                }
                if step == 0 {
                    return Some(relevance[c]);
                }
                let scaled = redundancy[c] / step as f64;
                Some(match scheme {
                    VarrankScheme::Mid => relevance[c] - scaled,
                    VarrankScheme::Miq => relevance[c] / scaled.max(MIN_REDUNDANCY),
                })
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (c, s) in row.iter().enumerate() {
            if let Some(s) = *s {
                if best.map_or(true, |(_, b)| s > b) {
                    best = Some((c, s));
                }
            }
        }
        let (pick, _) = best.expect("an unselected candidate remains");
        chosen[pick] = true;
        selected.push(cand[pick]);
        for c in (0..cand.len()).filter(|&c| !chosen[c]) {
            redundancy[c] += mi(cand[c], cand[pick]) / entropy[cand[c]].min(entropy[cand[pick]]);
        }
        scores.push(row);
    }
    Ok(VarrankRanking {
        scheme,
        target: target.to_string(),
        selected: selected.iter().map(|&j| table.name(j).to_string()).collect(),
        candidates: cand.iter().map(|&j| table.name(j).to_string()).collect(),
        scores,
        relevance,
        excluded,
        selected_index: selected,
        candidate_index: cand,
    })
}

/// Score matrix as CSV: one row per step, one column per candidate.
pub fn write_varrank_scores_csv<W: std::io::Write>(ranking: &VarrankRanking, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "selected".to_string()];
    header.extend(ranking.candidates.iter().cloned());
    w.write_record(&header)?;
    for (s, row) in ranking.scores.iter().enumerate() {
        let mut rec = vec![(s + 1).to_string(), ranking.selected[s].clone()];
        rec.extend(row.iter().map(|v| v.map(real).unwrap_or_else(|| "-".into())));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
