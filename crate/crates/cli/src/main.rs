use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use projvol::harness::{
    csv_string, emit_csv, emit_json, fit_regret_constant, json_string, read_sweep_points, run_experiment, run_stem,
    sweep, ExperimentConfig, HarnessError, LearnerKind, RegretModel, RunSummary, SweepGrid,
};
use projvol::oracles;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "projvol", version, about = "Regret experiments for multidimensional binary search learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (all replicas).
    Run(RunArgs),
    /// Run a grid over dimensions, tolerances, learners and adversaries.
    Sweep(RunArgs),
    /// Fit regret laws to the summary of a sweep directory.
    Fit(FitArgs),
    /// Run the convex-geometry property suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key=value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension (comma-separated list for sweep).
    #[arg(long)]
    d: Option<String>,
    /// Tolerance ε (comma-separated list for sweep).
    #[arg(long)]
    epsilon: Option<String>,
    /// practical | paper_main | paper_appendix | a number.
    #[arg(long)]
    delta: Option<String>,
    /// projected_volume | ellipsoid | centroid (comma-separated list for sweep).
    #[arg(long)]
    learner: Option<String>,
    /// fixed_random | round_robin_adaptive | simplex_counterexample | greedy_width
    /// (comma-separated list for sweep).
    #[arg(long)]
    adversary: Option<String>,
    /// Round cap.
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    /// Output directory; without it summaries go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep output directory holding summary.csv.
    dir: PathBuf,
    /// Restrict to one learner.
    #[arg(long)]
    learner: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run a single suite by name.
    #[arg(long)]
    suite: Option<String>,
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: HarnessError) -> anyhow::Error {
    match e {
        HarnessError::Config(msg) => ConfigError(msg).into(),
        other => other.into(),
    }
}

fn base_config(args: &RunArgs, scalar: &[(&str, &Option<String>)]) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_kv(&text).map_err(config_err)?;
    }
    for (key, value) in scalar {
        if let Some(v) = value {
            cfg.set(key, v).map_err(config_err)?;
        }
    }
    Ok(cfg)
}

fn list<T>(flag: &Option<String>, default: T, parse: impl Fn(&str) -> Result<T, String>) -> anyhow::Result<Vec<T>> {
    match flag {
        None => Ok(vec![default]),
        Some(s) => s
            .split(',')
            .map(|p| parse(p.trim()).map_err(|e| ConfigError(e).into()))
            .collect(),
    }
}

fn write_record_files(record: &projvol::harness::RunRecord, dir: &Path, format: Format) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = run_stem(&record.summary);
    if format != Format::Json {
        emit_csv(record, &dir.join(format!("{stem}.csv")))?;
    }
    if format != Format::Csv {
        emit_json(record, &dir.join(format!("{stem}.json")))?;
    }
    Ok(())
}

fn print_summary(s: &RunSummary) {
    println!(
        "{} vs {} d={} eps={} replica={} seed={}: regret {} in {} rounds ({}), soundness violations {}",
        s.learner,
        s.adversary,
        s.d,
        s.epsilon,
        s.replica,
        s.seed,
        s.total_regret,
        s.rounds,
        s.terminated_reason.as_str(),
        s.soundness_violations
    );
}

/// Returns whether every run stayed sound.
fn cmd_run(args: &RunArgs) -> anyhow::Result<bool> {
    let cfg = base_config(
        args,
        &[
            ("d", &args.d),
            ("epsilon", &args.epsilon),
            ("delta", &args.delta),
            ("learner", &args.learner),
            ("adversary", &args.adversary),
            ("rounds", &args.rounds),
            ("seed", &args.seed),
            ("replicas", &args.replicas),
        ],
    )?;
    cfg.validate().map_err(config_err)?;
    let records = run_experiment(&cfg).map_err(config_err)?;
    let mut sound = true;
    for record in &records {
        sound &= record.summary.soundness_violations == 0;
        match &args.out {
            Some(dir) => {
                write_record_files(record, dir, args.format)?;
                print_summary(&record.summary);
            }
            None => match args.format {
                Format::Csv => print!("{}", csv_string(record)),
                Format::Json | Format::Both => println!("{}", json_string(record)),
            },
        }
    }
    Ok(sound)
}

fn cmd_sweep(args: &RunArgs) -> anyhow::Result<bool> {
    let base = base_config(
        args,
        &[
            ("delta", &args.delta),
            ("rounds", &args.rounds),
            ("seed", &args.seed),
            ("replicas", &args.replicas),
        ],
    )?;
    let grid = SweepGrid {
        dims: list(&args.d, base.d, |s| s.parse().map_err(|e| format!("d: {e}")))?,
        epsilons: list(&args.epsilon, base.epsilon, |s| s.parse().map_err(|e| format!("epsilon: {e}")))?,
        learners: list(&args.learner, base.learner, |s| s.parse())?,
        adversaries: list(&args.adversary, base.adversary, |s| s.parse())?,
        base,
    };
    for cfg in grid.configs() {
        cfg.validate().map_err(config_err)?;
    }
    let summaries = sweep(&grid, args.out.as_deref()).map_err(config_err)?;
    for s in &summaries {
        print_summary(s);
    }
    Ok(summaries.iter().all(|s| s.soundness_violations == 0))
}

fn cmd_fit(args: &FitArgs) -> anyhow::Result<bool> {
    let learner = match &args.learner {
        Some(s) => Some(s.parse::<LearnerKind>().map_err(ConfigError)?),
        None => None,
    };
    let points = read_sweep_points(&args.dir, learner)?;
    let mut fits = Vec::new();
    for model in [RegretModel::DLog, RegretModel::D2Log] {
        let fit = fit_regret_constant(&points, model).map_err(config_err)?;
        println!("{}: C = {:.4}, residual = {:.4}", model.as_str(), fit.c, fit.residual);
        fits.push((model, fit));
    }
    let best = fits
        .iter()
        .min_by(|a, b| a.1.residual.total_cmp(&b.1.residual))
        .expect("two fits");
    println!("preferred: {} ({} points)", best.0.as_str(), points.len());
    Ok(true)
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let reports = match args.suite.as_deref() {
        None => oracles::run_all(args.seed),
        Some(name) => {
            let suite: fn(u64) -> oracles::SuiteReport = match name {
                "simplex_centroid" => oracles::simplex_centroid_suite,
                "grunbaum" => oracles::grunbaum_suite,
                "directional_grunbaum" => oracles::directional_grunbaum_suite,
                "approximate_grunbaum" => oracles::approximate_grunbaum_suite,
                "cylindrification" => oracles::cylindrification_suite,
                "large_ball" => oracles::large_ball_suite,
                "ellipsoid" => oracles::ellipsoid_suite,
                other => return Err(ConfigError(format!("unknown suite {other:?}")).into()),
            };
            vec![suite(args.seed)]
        }
    };
    for r in &reports {
        println!("{}", r.line());
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
