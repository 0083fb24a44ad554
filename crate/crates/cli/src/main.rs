//! Command-line runner for the exterior-domain radial Burgers laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CommandStatus;
use config::{RunConfig, SweepConfig};

#[derive(Parser)]
#[command(
    name = "exburg",
    version,
    about = "Stationary waves, energy weights, and decay measurements for the \
             exterior-domain radial Burgers equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary problem and verify its tail and sign structure.
    Stationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the energy weight and verify its defining properties.
    Weight {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline: stationary wave, weight, evolution, diagnostics, fits.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed (bump placement jitter).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full deterministic property suite (CI entry point).
    Verify {
        /// Optional config; defaults to the built-in desk-scale setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cartesian parameter sweep with per-cell classification.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn default_verify_config() -> RunConfig {
    serde_json::from_value(serde_json::json!({
        "spec_version": 1,
        "params": { "n": 4, "mu": 1.0, "r0": 1.0, "v_minus": 0.0, "v_plus": -1.0 }
    }))
    .expect("built-in config is valid")
}

fn run() -> anyhow::Result<CommandStatus> {
    // Usage problems are "could not run" (exit 1), distinct from failed
    // checks (exit 2); help and version print and exit cleanly.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            err.print().expect("write help");
            std::process::exit(0);
        }
        Err(err) => {
            err.print().expect("write usage error");
            std::process::exit(1);
        }
    };
    match cli.command {
        Command::Stationary { config, out } => {
            let config = RunConfig::from_path(&config)?;
            commands::cmd_stationary(&config, &out)
        }
        Command::Weight { config, out } => {
            let config = RunConfig::from_path(&config)?;
            commands::cmd_weight(&config, &out)
        }
        Command::Evolve { config, out, seed } => {
            let config = RunConfig::from_path(&config)?;
            commands::cmd_evolve(&config, &out, seed)
        }
        Command::Verify { config, out } => {
            let config = match config {
                Some(path) => RunConfig::from_path(&path)?,
                None => default_verify_config(),
            };
            commands::cmd_verify(&config, &out)
        }
        Command::Sweep {
            config,
            out,
            workers,
        } => {
            let config = SweepConfig::from_path(&config)?;
            commands::cmd_sweep(&config, &out, workers)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(CommandStatus::Pass) => ExitCode::SUCCESS,
        Ok(CommandStatus::ChecksFailed) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
