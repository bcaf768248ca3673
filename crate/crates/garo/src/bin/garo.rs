//! Command-line entry point: benchmarks and the desk-scale experiments,
//! emitting machine-readable results (JSON reports, CSV time series).
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure,
//! 4 acceptance-threshold failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use garo::error::Error;
use garo::experiments::{
    bench_regressions, load_toml, resolve_model, run_bench, run_ik_csv_rows, run_interp,
    run_pointmass, run_reach, write_csv, BenchConfig, BenchReport, IkConfig, InterpConfig,
    PointmassConfig, ReachConfig, TargetSpec,
};
use garo::model::RobotModel;

#[derive(Parser)]
#[command(name = "garo", version, about = "Geometric-algebra robotics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Micro-benchmark the five kernels (10000 executions × 10 repetitions).
    Bench {
        #[command(flatten)]
        common: Common,
        /// Baseline report to gate against (±15% on kernel medians).
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// The randomized inverse-kinematics experiment.
    Ik {
        #[command(flatten)]
        common: Common,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the success tolerance from the config.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Simulated reaching toward an OPNS target.
    Reach {
        #[command(flatten)]
        common: Common,
        /// Override the config targets with a single primitive literal
        /// (e.g. "point:0.4,0.2,0.4").
        #[arg(long)]
        target: Option<String>,
        /// Override the MPC planning horizon.
        #[arg(long)]
        horizon: Option<usize>,
        /// Override the simulation timestep.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Oriented-pointmass via-point trajectory optimization.
    Pointmass {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Motor interpolation and primitive sweep.
    Interp {
        #[command(flatten)]
        common: Common,
    },
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    match out {
        Some(path) => Ok(Box::new(std::fs::File::create(path)?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn load_model(config_path: &Path, model: &str) -> Result<RobotModel, Error> {
    RobotModel::load_file(resolve_model(config_path, model))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Bench { common, compare } => {
            let cfg: BenchConfig = load_toml(&common.config)?;
            let model = load_model(&common.config, &cfg.model)?;
            let report = run_bench(&model, cfg.executions, cfg.repetitions, common.seed)?;
            let mut out = open_out(&common.out)?;
            serde_json::to_writer_pretty(&mut out, &report)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            writeln!(out)?;
            if let Some(baseline_path) = compare {
                let text = std::fs::read_to_string(&baseline_path)
                    .map_err(|e| Error::Config(format!("{}: {e}", baseline_path.display())))?;
                let baseline: BenchReport = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", baseline_path.display())))?;
                let flags = bench_regressions(&report, &baseline, 0.15);
                if !flags.is_empty() {
                    for f in &flags {
                        eprintln!("regression: {f}");
                    }
                    return Ok(ExitCode::from(4));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ik { common, trials, tol } => {
            let mut cfg: IkConfig = load_toml(&common.config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(t) = tol {
                cfg.tol = t;
            }
            let model = load_model(&common.config, &cfg.model)?;
            let stats =
                garo::ik::run_ik_experiment(&model, cfg.trials, common.seed, cfg.tol, cfg.max_iters);
            let mut out = open_out(&common.out)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let (header, rows) = run_ik_csv_rows(&stats);
                    write_csv(&header, &rows, &mut out)?;
                }
                Format::Json => {
                    let report = json!({
                        "trials": stats.trials,
                        "successes": stats.successes,
                        "success_rate": stats.success_rate,
                        "mean_iterations": stats.mean_iterations,
                        "mean_final_cost": stats.mean_final_cost,
                        "mean_solve_time_us": stats.mean_solve_time_us,
                    });
                    serde_json::to_writer_pretty(&mut out, &report)
                        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
                    writeln!(out)?;
                }
            }
            eprintln!(
                "ik: {}/{} success ({:.2}%), mean iters {:.2}, mean cost {:.3e}, mean {:.1} us",
                stats.successes,
                stats.trials,
                100.0 * stats.success_rate,
                stats.mean_iterations,
                stats.mean_final_cost,
                stats.mean_solve_time_us
            );
            let gate_failed = cfg.min_success_rate.map_or(false, |g| stats.success_rate < g)
                || cfg.max_mean_iterations.map_or(false, |g| stats.mean_iterations > g)
                || cfg.max_mean_final_cost.map_or(false, |g| stats.mean_final_cost > g);
            if gate_failed {
                eprintln!("ik: acceptance thresholds violated");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reach { common, target, horizon, dt } => {
            let mut cfg: ReachConfig = load_toml(&common.config)?;
            if let Some(literal) = target {
                let kind = literal
                    .split(':')
                    .next()
                    .ok_or_else(|| Error::Config("empty --target literal".into()))?
                    .to_string();
                cfg.targets = vec![TargetSpec { time: 0.0, kind, literal }];
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(d) = dt {
                cfg.dt = d;
            }
            let model = load_model(&common.config, &cfg.model)?;
            let result = run_reach(&model, &cfg)?;
            let mut out = open_out(&common.out)?;
            write_csv(&result.header, &result.rows, &mut out)?;
            eprintln!("reach: final error norm {:.6e}", result.final_error);
            if let Some(threshold) = cfg.error_threshold {
                if result.final_error > threshold {
                    eprintln!("reach: final error above threshold {threshold:.3e}");
                    return Ok(ExitCode::from(4));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Pointmass { common, horizon, dt } => {
            let mut cfg: PointmassConfig = load_toml(&common.config)?;
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(d) = dt {
                cfg.dt = d;
            }
            let result = run_pointmass(&cfg)?;
            let mut out = open_out(&common.out)?;
            write_csv(&result.header, &result.rows, &mut out)?;
            for (step, err) in &result.via_errors {
                eprintln!("pointmass: via at step {step}: pose error {err:.6e}");
            }
            if let Some(threshold) = cfg.error_threshold {
                if result.via_errors.iter().any(|(_, e)| *e > threshold) {
                    eprintln!("pointmass: via-point error above threshold {threshold:.3e}");
                    return Ok(ExitCode::from(4));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Interp { common } => {
            let cfg: InterpConfig = load_toml(&common.config)?;
            let result = run_interp(&cfg)?;
            let mut out = open_out(&common.out)?;
            write_csv(&result.header, &result.rows, &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
