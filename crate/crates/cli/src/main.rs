//! Command-line surface: single Riemann solves, toll-gate simulations, and
//! analysis campaigns.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config
//! errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "twophase",
    version,
    about = "Two-phase traffic Riemann solvers and front tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single (possibly constrained) Riemann problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the solution record (stdout only if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the wave-front-tracking simulation and write CSV/SVG outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the rarefaction discretization step.
        #[arg(long)]
        delta_v: Option<f64>,
    },
    /// Run analysis suites (consistency, tv, invariant-domains, continuity).
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the sampling seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Errors that stem from the user's input rather than the computation.
fn is_usage_error(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<serde_json::Error>().is_some()
        || err.downcast_ref::<std::io::Error>().is_some()
    {
        return true;
    }
    match err.downcast_ref::<twophase::Error>() {
        Some(
            twophase::Error::InvalidParams(_)
            | twophase::Error::OutOfDomain { .. }
            | twophase::Error::BadConfig(_)
            | twophase::Error::ConstraintRange(_)
            | twophase::Error::MarkerRange(_),
        ) => true,
        Some(_) => false,
        None => err
            .chain()
            .any(|c| c.to_string().contains("config") || c.to_string().contains("suite")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => commands::cmd_solve(&config, out.as_deref()),
        Command::Simulate { config, out, delta_v } => {
            commands::cmd_simulate(&config, out.as_deref(), delta_v)
        }
        Command::Analyze { config, out, seed } => {
            commands::cmd_analyze(&config, out.as_deref(), seed)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_usage_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
