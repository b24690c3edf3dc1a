//! `mvmc`: batch driver for Monte-Carlo and multilevel Monte-Carlo ensembles.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when samples
//! failed (their keys are listed in `failures.csv`), 1 for anything else.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mvmc_core::random::SampleKey;

use crate::config::{ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Samples(Vec<(SampleKey, String)>),
    Runtime(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Samples(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "configuration error: {msg}"),
            Failure::Samples(list) => {
                write!(f, "{} sample(s) failed:", list.len())?;
                for (key, msg) in list {
                    write!(f, "\n  level {} sample {} ({:?}): {msg}", key.level, key.index, key.role)?;
                }
                Ok(())
            }
            Failure::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<mvmc_core::Error> for Failure {
    fn from(e: mvmc_core::Error) -> Self {
        match e {
            mvmc_core::Error::SampleFailures(list) => Failure::Samples(list),
            mvmc_core::Error::InvalidArgument(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "mvmc", version, about = "Measure-valued solutions by Monte-Carlo and multilevel Monte-Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample workers, 0 for all cores; overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Run directory; overrides `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-level ensemble of `mc_samples` on level `--level` (default `levels`).
    RunMc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<u32>,
        /// Also record solver diagnostics of sample 0.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Multilevel ensemble from `--plan`, `samples`, or `tau` and the latest variances.csv.
    RunMlmc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Relaxation window; switches to relaxed coupling.
        #[arg(long)]
        relaxation_t0: Option<f64>,
        #[arg(long)]
        diagnostics: bool,
    },
    /// Probe pass: level variances with `probe_samples` per level.
    EstimateVariances {
        #[command(flatten)]
        common: Common,
    },
    /// Optimal samples per level from measured variances.
    PlanSamples {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tau: Option<f64>,
        /// Defaults to variances.csv in the run directory.
        #[arg(long)]
        variances: Option<PathBuf>,
        /// Functional whose variances drive the plan.
        #[arg(long, default_value_t = 0)]
        functional: usize,
    },
    /// L1 errors of the latest mean and variance fields against a reference
    /// run directory, or the analytic solution.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Mass, weak-BV and entropy production along one sample.
    Diagnostics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long, default_value_t = 0)]
        sample: u64,
    },
    /// Log-log series (work vs error, Δx vs level variance) for plotting.
    EmitPlotData {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::RunMc { .. } => "run-mc",
            Command::RunMlmc { .. } => "run-mlmc",
            Command::EstimateVariances { .. } => "estimate-variances",
            Command::PlanSamples { .. } => "plan-samples",
            Command::Compare { .. } => "compare",
            Command::Diagnostics { .. } => "diagnostics",
            Command::EmitPlotData { .. } => "emit-plot-data",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::RunMc { common, .. }
            | Command::RunMlmc { common, .. }
            | Command::EstimateVariances { common }
            | Command::PlanSamples { common, .. }
            | Command::Compare { common, .. }
            | Command::Diagnostics { common, .. }
            | Command::EmitPlotData { common } => common,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = cli.command.common();
    let relaxation_t0 = match &cli.command {
        Command::RunMlmc { relaxation_t0, .. } => *relaxation_t0,
        _ => None,
    };
    let over = Overrides {
        seed: common.seed,
        workers: common.workers,
        output_dir: common.output_dir.clone(),
        relaxation_t0,
    };
    let cfg = ExperimentConfig::load(&common.config)?.resolve(&over)?;
    let mut ctx = commands::Context::new(cfg)?;
    let result = match &cli.command {
        Command::RunMc { level, diagnostics, .. } => ctx.run_mc(*level, *diagnostics),
        Command::RunMlmc { plan, diagnostics, .. } => ctx.run_mlmc(plan.as_deref(), *diagnostics),
        Command::EstimateVariances { .. } => ctx.estimate_variances(),
        Command::PlanSamples { tau, variances, functional, .. } => {
            ctx.plan_samples(*tau, variances.as_deref(), *functional)
        }
        Command::Compare { reference, .. } => ctx.compare(reference.as_deref()),
        Command::Diagnostics { level, sample, .. } => ctx.diagnostics(*level, *sample),
        Command::EmitPlotData { .. } => ctx.emit_plot_data(),
    };
    let status = match &result {
        Ok(()) => "ok",
        Err(Failure::Samples(_)) => "sample-failures",
        Err(Failure::Config(_)) => "config-error",
        Err(Failure::Runtime(_)) => "error",
    };
    ctx.finish(cli.command.name(), status)?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
