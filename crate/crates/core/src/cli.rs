//! Command-line interface.
//!
//! Exit codes: 0 success, 1 failure, 2 isolated target, 64 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{compare_predictions, write_comparison_csv, write_varrank_scores_csv, varrank_select, Baseline, CompareConfig, VarrankScheme};
use crate::bpa::{best_step_model, run_bpa, write_score_profile_csv, BpaConfig, Method, Outcome};
use crate::data::{load_csv, read_schema, MixedDataTable, NaPolicy};
use crate::density::{density_curve, write_density_curve_csv};
use crate::error::{Error, Result};
use crate::forest::forest_for_table;
use crate::format::to_json_string;
use crate::knn::KraskovConfig;
use crate::linear::PruneMode;
use crate::manifest::RunManifest;
use crate::pairwise::{all_pairwise_scores, write_edge_scores_csv, Criterion, VarianceMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_ISOLATED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "bestpath", version, about = "Best-path variable selection on mixed graphical forests")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn the pairwise forest and export it.
    Forest(ForestArgs),
    /// Run variable selection for one target.
    Select(SelectArgs),
    /// Compare the selected model against a baseline on repeated splits.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON schema fixing variable kinds and level order.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    Aic,
    Bic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarianceArg {
    Hom,
    Het,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ec,
    R2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PruneArg {
    Simultaneous,
    Backward,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    Enet,
    Varrank,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Mid,
    Miq,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "bic")]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value = "hom")]
    variance: VarianceArg,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out_dot: PathBuf,
    #[arg(long)]
    out_json: PathBuf,
    /// Pairwise score table (default: next to the JSON output).
    #[arg(long)]
    out_edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value = "ec")]
    method: MethodArg,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Folds for the cross-validated MSE of the R2 method.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Permutations per independence test.
    #[arg(long, default_value_t = 99)]
    permutations: usize,
    /// Neighbours for the mutual-information estimate.
    #[arg(long, default_value_t = 3)]
    k_neighbors: usize,
    #[arg(long, value_enum, default_value = "simultaneous")]
    prune: PruneArg,
    /// Extra slack within which a smaller path-step wins.
    #[arg(long, default_value_t = 0.0)]
    tie_tolerance: f64,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    out: PathBuf,
    /// Per-step score table (default: next to the report).
    #[arg(long)]
    out_profile: Option<PathBuf>,
    /// Density curve of the best step, EC method only (default: next to the report).
    #[arg(long)]
    out_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    curve_points: usize,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long, value_enum, default_value = "enet")]
    baseline: BaselineArg,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    #[arg(long, value_enum, default_value = "mid")]
    scheme: SchemeArg,
    /// Per-repeat MSE table.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON (default: next to the table).
    #[arg(long)]
    out_summary: Option<PathBuf>,
}

impl ModelArgs {
    fn criterion(&self) -> Criterion {
        match self.criterion {
            CriterionArg::Aic => Criterion::Aic,
            CriterionArg::Bic => Criterion::Bic,
        }
    }

    fn variance(&self) -> VarianceMode {
        match self.variance {
            VarianceArg::Hom => VarianceMode::Homogeneous,
            VarianceArg::Het => VarianceMode::Heterogeneous,
        }
    }
}

impl SelectionArgs {
    fn config(&self) -> BpaConfig {
        BpaConfig {
            method: match self.method {
                MethodArg::Ec => Method::Ec,
                MethodArg::R2 => Method::R2,
            },
            criterion: self.model.criterion(),
            variance_mode: self.model.variance(),
            folds: self.folds,
            kraskov: KraskovConfig {
                k_neighbors: self.k_neighbors,
                permutations: self.permutations,
                ..KraskovConfig::default()
            },
            alpha: self.alpha,
            prune_mode: match self.prune {
                PruneArg::Simultaneous => PruneMode::Simultaneous,
                PruneArg::Backward => PruneMode::Backward,
            },
            tie_tolerance: self.tie_tolerance,
            seed: self.seed,
            ..BpaConfig::default()
        }
    }
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load(args: &DataArgs, manifest: &mut RunManifest) -> Result<MixedDataTable> {
    let schema = args.schema.as_deref().map(read_schema).transpose()?;
    let table = load_csv(&args.data, schema.as_deref(), NaPolicy::DropRow)?;
    manifest.add_input(&args.data)?;
    if let Some(s) = &args.schema {
        manifest.add_input(s)?;
    }
    Ok(table)
}

fn finish(manifest: &mut RunManifest, outputs: &[&Path], primary: &Path) -> Result<()> {
    for p in outputs {
        manifest.add_output(p)?;
    }
    manifest.write(&sibling(primary, "manifest.json"))
}

fn cmd_forest(args: &ForestArgs) -> Result<i32> {
    let config = serde_json::json!({
        "criterion": args.model.criterion(),
        "variance_mode": args.model.variance(),
    });
    let mut manifest = RunManifest::new("forest", &config, 0)?;
    let table = load(&args.data, &mut manifest)?;
    let scores = all_pairwise_scores(&table, args.model.variance())?;
    let forest = forest_for_table(&table, &scores, args.model.criterion());
    write_text(&args.out_dot, &forest.to_dot(None))?;
    write_text(&args.out_json, &to_json_string(&forest.to_json())?)?;
    let edges = args.out_edges.clone().unwrap_or_else(|| sibling(&args.out_json, "edges.csv"));
    write_edge_scores_csv(&scores, &table, create(&edges)?)?;
    finish(&mut manifest, &[&args.out_dot, &args.out_json, &edges], &args.out_json)?;
    println!("{} nodes, {} edges", forest.n_nodes(), forest.edges().len());
    Ok(EXIT_OK)
}

fn cmd_select(args: &SelectArgs) -> Result<i32> {
    let cfg = args.selection.config();
    let mut manifest = RunManifest::new("select", &cfg, cfg.seed)?;
    let table = load(&args.data, &mut manifest)?;
    let report = run_bpa(&table, &args.selection.target, &cfg)?;
    write_text(&args.out, &to_json_string(&report)?)?;
    let profile = args.out_profile.clone().unwrap_or_else(|| sibling(&args.out, "profile.csv"));
    write_score_profile_csv(&report, create(&profile)?)?;
    let mut outputs = vec![args.out.clone(), profile];
    if let Some(model) = best_step_model(&table, &report, &cfg)? {
        let curve = args.out_curve.clone().unwrap_or_else(|| sibling(&args.out, "curve.csv"));
        write_density_curve_csv(&density_curve(&model, args.curve_points), create(&curve)?)?;
        outputs.push(curve);
    }
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    finish(&mut manifest, &refs, &args.out)?;
    match report.outcome {
        Outcome::IsolatedTarget => {
            eprintln!("target `{}` is isolated in the forest; nothing to select", report.target);
            Ok(EXIT_ISOLATED)
        }
        Outcome::Selected => {
            println!(
                "best path-step w{}: {{{}}}; after pruning: {{{}}}",
                report.best_k.unwrap_or(0),
                report.m_w.join(", "),
                report.m_wf.join(", ")
            );
            Ok(EXIT_OK)
        }
    }
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let bpa_cfg = args.selection.config();
    let cfg = CompareConfig {
        baseline: match args.baseline {
            BaselineArg::Enet => Baseline::Enet,
            BaselineArg::Varrank => Baseline::Varrank,
        },
        repeats: args.repeats,
        train_frac: args.train_frac,
        seed: bpa_cfg.seed,
        varrank_scheme: match args.scheme {
            SchemeArg::Mid => VarrankScheme::Mid,
            SchemeArg::Miq => VarrankScheme::Miq,
        },
        ..CompareConfig::default()
    };
    let config = serde_json::json!({ "selection": &bpa_cfg, "comparison": &cfg });
    let mut manifest = RunManifest::new("compare", &config, bpa_cfg.seed)?;
    let table = load(&args.data, &mut manifest)?;
    let report = run_bpa(&table, &args.selection.target, &bpa_cfg)?;
    let cmp = compare_predictions(&table, &report, &cfg)?;
    write_comparison_csv(&cmp, create(&args.out)?)?;
    let summary = args.out_summary.clone().unwrap_or_else(|| sibling(&args.out, "summary.json"));
    write_text(&summary, &to_json_string(&cmp)?)?;
    let mut outputs = vec![args.out.clone(), summary];
    if cfg.baseline == Baseline::Varrank {
        let m = report.m_wf_index.len().clamp(1, table.n_vars() - 1);
        let ranking = varrank_select(&table, &report.target, m, cfg.varrank_scheme)?;
        let scores = sibling(&args.out, "varrank.csv");
        write_varrank_scores_csv(&ranking, create(&scores)?)?;
        outputs.push(scores);
    }
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    finish(&mut manifest, &refs, &args.out)?;
    println!(
        "selected model wins {}/{} repeats; median test MSE {:.4} vs {:.4}",
        cmp.wins,
        cfg.repeats,
        cmp.median_mse_bpa,
        cmp.median_mse_baseline
    );
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Forest(a) => cmd_forest(a),
        Command::Select(a) => cmd_select(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        eprintln!("  caused by: {s}");
        src = s.source();
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            EXIT_FAILURE
        }
    }
}
