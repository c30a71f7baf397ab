//! `opticroute`: build cost fields, solve the eikonal equation, trace
//! routes and compare them on sampled networks.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opticroute_core::Error as CoreError;

use config::{ExperimentConfig, Overrides};

pub const THREADS_ENV: &str = "OPTICROUTE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    /// Failure while producing the named artifact.
    #[error("{label}: {source}")]
    Artifact {
        label: String,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn config(key: &str, e: CoreError) -> Self {
        CliError::Config(format!("{key}: {e}"))
    }

    pub fn artifact(label: impl Into<String>) -> impl FnOnce(CoreError) -> Self {
        let label = label.into();
        move |source| CliError::Artifact { label, source }
    }

    /// 2 for configuration and I/O problems, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Artifact { source, .. } if source.is_numeric() => 3,
            CliError::Artifact { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "opticroute",
    version,
    about = "Optimal routing in dense wireless networks via geometrical optics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cost field of the configured model over the density (CSV + SVG heatmap).
    CostField(CommonArgs),
    /// Eikonal solution, wavefronts and rays (CSV + SVG).
    Eikonal(CommonArgs),
    /// Optimal trajectories A to B for each configured model (CSV + SVG).
    Route(CommonArgs),
    /// Forwarding along the straight line and the optics route vs the
    /// shortest-path oracle, per seed (JSON + CSV + SVG).
    Compare(CommonArgs),
    /// Monte-Carlo hop statistics and normalized cost curves over densities.
    Hopstats(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run with this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid spacing in meters.
    #[arg(long = "grid-h")]
    grid_h: Option<f64>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}

type Runner = fn(&ExperimentConfig) -> Result<Vec<PathBuf>, CliError>;

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    init_threads()?;
    let (run, args): (Runner, _) = match cli.command {
        Command::CostField(a) => (commands::cost_field, a),
        Command::Eikonal(a) => (commands::eikonal, a),
        Command::Route(a) => (commands::route, a),
        Command::Compare(a) => (commands::compare, a),
        Command::Hopstats(a) => (commands::hopstats, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        grid_h: args.grid_h,
    };
    let cfg = ExperimentConfig::load(&args.config, &overrides)?;
    run(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
