//! The best-path pipeline.
//!
//! 0. Learn a forest from penalised pairwise information.
//! 1. Cut the target's tree into nested path-steps by distance.
//! 2. Score every path-step, by entropy coefficient or by adjusted R².
//! 3. Keep the best step; ties go to the smaller step.
//! 4. Prune its variables with per-variable tests.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::MixedDataTable;
use crate::density::{self, Bandwidths, ConditionalDensityModel, DensityCvConfig, EcScore};
use crate::error::{Error, Result};
use crate::forest::{forest_for_table, Forest, ForestJson, PathStep};
use crate::knn::{independence_test, KraskovConfig};
use crate::linear::{kfold_cv_mse, prune_by_ttest, regress, OlsFit, PruneMode};
use crate::pairwise::{all_pairwise_scores, Criterion, EdgeScore, VarianceMode};
use crate::rng::derive_seed;

/// Scores closer than this are treated as equal.
const EXACT_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Ec,
    R2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpaConfig {
    pub method: Method,
    pub criterion: Criterion,
    pub variance_mode: VarianceMode,
    /// Folds for the cross-validated MSE reported by the R² method.
    pub folds: usize,
    /// Neighbours and permutations for the independence tests. The seed and
    /// alpha inside are replaced by values derived from this config.
    pub kraskov: KraskovConfig,
    pub density: DensityCvConfig,
    pub alpha: f64,
    pub prune_mode: PruneMode,
    /// Extra slack, beyond exact ties, within which a smaller step wins.
    pub tie_tolerance: f64,
    pub seed: u64,
}

impl Default for BpaConfig {
    fn default() -> Self {
        BpaConfig {
            method: Method::Ec,
            criterion: Criterion::Bic,
            variance_mode: VarianceMode::Homogeneous,
            folds: 10,
            kraskov: KraskovConfig::default(),
            density: DensityCvConfig::default(),
            alpha: 0.05,
            prune_mode: PruneMode::Simultaneous,
            tie_tolerance: 0.0,
            seed: 0,
        }
    }
}

impl BpaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("at least two folds are required".into()));
        }
        if self.tie_tolerance < 0.0 {
            return Err(Error::InvalidArgument("tie tolerance must be non-negative".into()));
        }
        KraskovConfig {
            alpha: self.alpha,
            ..self.kraskov
        }
        .validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Selected,
    IsolatedTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearStepScore {
    pub r2: f64,
    pub adj_r2: f64,
    pub cv_mse: f64,
    pub in_sample_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepScore {
    pub k: usize,
    pub n_vars: usize,
    pub members: Vec<String>,
    /// The selection score; `None` for a skipped single-variable step.
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec: Option<EcScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<Bandwidths>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub smoothed_out: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearStepScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableTest {
    /// Variable name, or `name=level` for one dummy of a factor.
    pub name: String,
    /// Estimated mutual information (EC method) or t statistic (R² method).
    pub statistic: f64,
    pub p_value: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub flags: Vec<String>,
    pub rows_read: usize,
    pub dropped_rows: usize,
    pub floored_densities: usize,
    pub sentinel_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config: BpaConfig,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub target: String,
    pub outcome: Outcome,
    pub model_0: ForestJson,
    /// The variables of the target's tree, target included.
    pub model_0_variables: Vec<String>,
    pub path_step_scores: Vec<StepScore>,
    pub best_k: Option<usize>,
    pub m_w: Vec<String>,
    pub m_wf: Vec<String>,
    pub variable_tests: Vec<VariableTest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_fit: Option<OlsFit>,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
    #[serde(skip)]
    pub target_index: usize,
    #[serde(skip)]
    pub m_w_index: Vec<usize>,
    #[serde(skip)]
    pub m_wf_index: Vec<usize>,
    #[serde(skip)]
    pub model_0_index: Vec<usize>,
}

/// Index of the best score: the largest, with anything within the tie
/// tolerance of it resolved towards the earliest entry.
pub fn best_index(scores: &[Option<f64>], tolerance: f64) -> Option<usize> {
    let max = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    scores
        .iter()
        .position(|s| matches!(s, Some(v) if max - v <= EXACT_TIE + tolerance))
}

fn names(table: &MixedDataTable, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| table.name(i).to_string()).collect()
}

struct Stage0 {
    scores: Vec<EdgeScore>,
    forest: Forest,
}

fn stage0(table: &MixedDataTable, cfg: &BpaConfig) -> Result<Stage0> {
    let scores = all_pairwise_scores(table, cfg.variance_mode).map_err(|e| e.at_step("step 0"))?;
    let forest = forest_for_table(table, &scores, cfg.criterion);
    Ok(Stage0 { scores, forest })
}

fn step_density_config(cfg: &BpaConfig, k: usize) -> DensityCvConfig {
    DensityCvConfig {
        seed: derive_seed(cfg.seed, 100 + k as u64),
        ..cfg.density.clone()
    }
}

/// Refit the density model of the report's best path-step, exactly as it was
/// scored. `None` when the step was not scored by the EC method.
pub fn best_step_model(
    table: &MixedDataTable,
    report: &SelectionReport,
    cfg: &BpaConfig,
) -> Result<Option<ConditionalDensityModel>> {
    let Some(k) = report.best_k else { return Ok(None) };
    if cfg.method != Method::Ec || report.m_w_index.len() < 2 {
        return Ok(None);
    }
    density::fit_conditional_density(table, report.target_index, &report.m_w_index, &step_density_config(cfg, k)).map(Some)
}

fn score_ec_step(table: &MixedDataTable, target: usize, step: &PathStep, cfg: &BpaConfig) -> Result<StepScore> {
    let mut out = StepScore {
        k: step.k,
        n_vars: step.members.len(),
        members: names(table, &step.members),
        score: None,
        ec: None,
        bandwidths: None,
        smoothed_out: Vec::new(),
        linear: None,
    };
    if step.members.len() < 2 {
        return Ok(out);
    }
    let model = density::fit_conditional_density(table, target, &step.members, &step_density_config(cfg, step.k))?;
    let ec = density::ec_score(&model, step.k)?;
    out.score = Some(ec.ec);
    out.ec = Some(ec);
    out.smoothed_out = step
        .members
        .iter()
        .zip(model.smoothed_out())
        .filter(|(_, &s)| s)
        .map(|(&m, _)| table.name(m).to_string())
        .collect();
    out.bandwidths = Some(model.bandwidths().clone());
    Ok(out)
}

fn score_r2_step(table: &MixedDataTable, target: usize, step: &PathStep, cfg: &BpaConfig) -> Result<StepScore> {
    let reg = regress(table, target, &step.members, None)?;
    let cv = kfold_cv_mse(table, target, &step.members, cfg.folds, derive_seed(cfg.seed, 1))?;
    Ok(StepScore {
        k: step.k,
        n_vars: step.members.len(),
        members: names(table, &step.members),
        score: Some(reg.fit.adj_r2),
        ec: None,
        bandwidths: None,
        smoothed_out: Vec::new(),
        linear: Some(LinearStepScore {
            r2: reg.fit.r2,
            adj_r2: reg.fit.adj_r2,
            cv_mse: cv.mean_mse,
            in_sample_mse: reg.fit.mse(),
        }),
    })
}

/// Run the whole pipeline for one target.
pub fn run_bpa(table: &MixedDataTable, target: &str, cfg: &BpaConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let y = table.index_of(target)?;
    if cfg.method == Method::R2 && table.is_discrete(y) {
        return Err(Error::WrongKind {
            name: target.to_string(),
            expected: "continuous for the R2 method",
        });
    }
    let Stage0 { scores, forest } = stage0(table, cfg)?;
    let mut diagnostics = Diagnostics {
        rows_read: table.load_report().rows_read,
        dropped_rows: table.load_report().dropped_rows,
        sentinel_edges: forest.sentinel_edges(),
        ..Default::default()
    };
    if diagnostics.sentinel_edges > 0 {
        diagnostics
            .flags
            .push(format!("{} perfectly dependent pair(s) entered the forest first", diagnostics.sentinel_edges));
    }
    for s in scores.iter().filter(|s| !s.flags.is_empty()) {
        let flags: Vec<String> = s
            .flags
            .iter()
            .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        diagnostics
            .flags
            .push(format!("pair {}-{}: {}", table.name(s.u), table.name(s.v), flags.join(",")));
    }
    let model_0_index = forest.component(y);
    let mut report = SelectionReport {
        target: target.to_string(),
        outcome: Outcome::Selected,
        model_0: forest.to_json(),
        model_0_variables: names(table, &model_0_index),
        path_step_scores: Vec::new(),
        best_k: None,
        m_w: Vec::new(),
        m_wf: Vec::new(),
        variable_tests: Vec::new(),
        final_fit: None,
        diagnostics,
        provenance: Provenance {
            config: cfg.clone(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        target_index: y,
        m_w_index: Vec::new(),
        m_wf_index: Vec::new(),
        model_0_index,
    };

    let steps = match forest.path_steps(y) {
        Ok(s) => s,
        Err(Error::IsolatedTarget(_)) => {
            report.outcome = Outcome::IsolatedTarget;
            report
                .diagnostics
                .flags
                .push(format!("target `{target}` has no neighbours; every variable is marginally independent of it"));
            return Ok(report);
        }
        Err(e) => return Err(e.at_step("step 1")),
    };

    let scored: Vec<StepScore> = steps
        .par_iter()
        .map(|s| match cfg.method {
            Method::Ec => score_ec_step(table, y, s, cfg),
            Method::R2 => score_r2_step(table, y, s, cfg),
        })
        .collect::<Result<_>>()
        .map_err(|e| e.at_step("step 2"))?;
    for s in &scored {
        if let Some(ec) = &s.ec {
            report.diagnostics.floored_densities += ec.floored_densities;
            if s.smoothed_out.len() == s.n_vars {
                report
                    .diagnostics
                    .flags
                    .push(format!("path-step {}: every variable was smoothed out", s.k));
            }
        }
    }

    let step_scores: Vec<Option<f64>> = scored.iter().map(|s| s.score).collect();
    let best = match best_index(&step_scores, cfg.tie_tolerance) {
        Some(b) => b,
        None => {
            report
                .diagnostics
                .flags
                .push("no path-step could be scored; the first path-step is used".into());
            0
        }
    };
    report.path_step_scores = scored;
    report.best_k = Some(steps[best].k);
    let m_w = steps[best].members.clone();

    let survivors = match cfg.method {
        Method::Ec => {
            let y_vals = table.column(y).to_f64();
            let tests: Vec<_> = m_w
                .par_iter()
                .map(|&j| {
                    let kc = KraskovConfig {
                        seed: derive_seed(cfg.seed, 10_000 + j as u64),
                        alpha: cfg.alpha,
                        ..cfg.kraskov
                    };
                    independence_test(&table.column(j).to_f64(), &y_vals, &kc)
                })
                .collect::<Result<_>>()
                .map_err(|e| e.at_step("step 4"))?;
            report.variable_tests = m_w
                .iter()
                .zip(&tests)
                .map(|(&j, t)| VariableTest {
                    name: table.name(j).to_string(),
                    statistic: t.mi_hat,
                    p_value: t.p_value,
                    kept: t.reject,
                })
                .collect();
            m_w.iter().zip(&tests).filter(|(_, t)| t.reject).map(|(&j, _)| j).collect::<Vec<_>>()
        }
        Method::R2 => {
            let reg = regress(table, y, &m_w, None).map_err(|e| e.at_step("step 4"))?;
            let pruned = prune_by_ttest(table, &reg, cfg.alpha, cfg.prune_mode).map_err(|e| e.at_step("step 4"))?;
            report.variable_tests = pruned
                .tests
                .iter()
                .map(|t| VariableTest {
                    name: t.name.clone(),
                    statistic: t.t_value,
                    p_value: t.p_value,
                    kept: t.kept,
                })
                .collect();
            report.final_fit = pruned.refit.map(|r| r.fit);
            pruned.survivors
        }
    };
    if survivors.is_empty() {
        report.diagnostics.flags.push("every variable of the best path-step was pruned".into());
    }

    assert!(survivors.iter().all(|v| m_w.contains(v)), "pruned set must lie inside the best step");
    assert!(
        m_w.iter().all(|v| report.model_0_index.contains(v)) && !m_w.contains(&y),
        "best step must lie inside the target's tree"
    );
    report.m_w = names(table, &m_w);
    report.m_wf = names(table, &survivors);
    report.m_w_index = m_w;
    report.m_wf_index = survivors;
    Ok(report)
}

/// One row of the per-step score table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub k: usize,
    pub n_vars: usize,
    pub score: Option<f64>,
}

pub fn score_profile(report: &SelectionReport) -> Vec<ProfileRow> {
    report
        .path_step_scores
        .iter()
        .map(|s| ProfileRow {
            k: s.k,
            n_vars: s.n_vars,
            score: s.score,
        })
        .collect()
}

/// Score table as CSV. Skipped steps show `-`.
pub fn write_score_profile_csv<W: std::io::Write>(report: &SelectionReport, out: W) -> Result<()> {
    use crate::format::real;
    let opt = |v: Option<f64>| v.map(real).unwrap_or_else(|| "-".to_string());
    let mut w = csv::Writer::from_writer(out);
    match report.provenance.config.method {
        Method::Ec => {
            w.write_record(["k", "n_vars", "ec", "ecd", "symmetric_kl", "twice_mi"])?;
            for s in &report.path_step_scores {
                w.write_record([
                    s.k.to_string(),
                    s.n_vars.to_string(),
                    opt(s.score),
                    opt(s.ec.map(|e| e.ecd)),
                    opt(s.ec.map(|e| e.symmetric_kl)),
                    opt(s.ec.map(|e| e.twice_mi)),
                ])?;
            }
        }
        Method::R2 => {
            w.write_record(["k", "n_vars", "adj_r2", "r2", "cv_mse", "in_sample_mse"])?;
            for s in &report.path_step_scores {
                let l = s.linear.as_ref();
                w.write_record([
                    s.k.to_string(),
                    s.n_vars.to_string(),
                    opt(s.score),
                    opt(l.map(|l| l.r2)),
                    opt(l.map(|l| l.cv_mse)),
                    opt(l.map(|l| l.in_sample_mse)),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
