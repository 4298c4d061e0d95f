//! `kmpsim` — experiments on the three gradient chains from a single
//! binary. Every command is a deterministic function of its resolved JSON
//! config (embedded in the output manifest); see the repository README for
//! the schemas.
//!
//! Exit codes: 0 success, 2 validation error, 3 suite/criterion failure,
//! 4 I/O error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Suite(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Suite(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Suite(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kmpsim",
    version,
    about = "Event-driven simulation and verification of KMP-type gradient chains on the torus"
)]
struct Cli {
    /// Worker threads for replica parallelism (default: available
    /// parallelism; the KMPSIM_THREADS env var overrides the default and
    /// this flag overrides both).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Flat config overrides, e.g. --set n=64 --set model=harm
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run replica trajectories and record pairings, mass and profiles.
    Simulate(CommonArgs),
    /// Hydrodynamic convergence experiment against the spectral solution.
    Hydro(CommonArgs),
    /// Attractiveness: rate-criterion scan (dkmp/harm) or basic coupling (gkmp).
    Attract(CommonArgs),
    /// Exact-identity suites (gradient, Gamma-ratio sums, generator products, bounds).
    Verify(CommonArgs),
    /// Closed-form vs sampled invariant-measure moment tables.
    Moments(CommonArgs),
}

fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("KMPSIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(threads) = flag.or(from_env) {
        // ignore the error when a pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => {
            let cfg = config::resolve::<config::SimulateConfig>(
                args.config.as_deref(),
                &args.set,
                args.seed,
                args.out_dir.as_deref(),
            )?;
            commands::cmd_simulate(&cfg)
        }
        Command::Hydro(args) => {
            let cfg = config::resolve::<config::HydroConfig>(
                args.config.as_deref(),
                &args.set,
                args.seed,
                args.out_dir.as_deref(),
            )?;
            commands::cmd_hydro(&cfg)
        }
        Command::Attract(args) => {
            let cfg = config::resolve::<config::AttractConfig>(
                args.config.as_deref(),
                &args.set,
                args.seed,
                args.out_dir.as_deref(),
            )?;
            commands::cmd_attract(&cfg)
        }
        Command::Verify(args) => {
            let cfg = config::resolve::<config::VerifyConfig>(
                args.config.as_deref(),
                &args.set,
                args.seed,
                args.out_dir.as_deref(),
            )?;
            commands::cmd_verify(&cfg)
        }
        Command::Moments(args) => {
            let cfg = config::resolve::<config::MomentsConfig>(
                args.config.as_deref(),
                &args.set,
                args.seed,
                args.out_dir.as_deref(),
            )?;
            commands::cmd_moments(&cfg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
