//! Command-line front end for the frictional transonic duct-shock solver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{execute, CommandKind, RunInputs};

/// Transonic shock flows in a frictional rectilinear duct: background
/// construction, solvability scan, perturbed-shock solve, residual
/// verification, and parameter sweeps.
#[derive(Parser)]
#[command(name = "fanno-shock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the shocked background flow and its linearization coefficients.
    Background(RunArgs),
    /// Scan the shock-position solvability functional over eigenvalues.
    Scondition(RunArgs),
    /// Solve the perturbed-shock problem and write the solution bundle.
    Solve(RunArgs),
    /// Check conservation-law and jump residuals of a solved bundle.
    Verify(RunArgs),
    /// Sweep shock position and friction; report solvability and
    /// convergence per combination.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker-thread cap for sweeps (default: FANNO_SHOCK_THREADS, then 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Proceed with `solve` even when the solvability scan fails.
    #[arg(long)]
    force: bool,
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Background(a) => (CommandKind::Background, a),
        Command::Scondition(a) => (CommandKind::Scondition, a),
        Command::Solve(a) => (CommandKind::Solve, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
    };
    let threads = args
        .threads
        .or_else(|| {
            std::env::var("FANNO_SHOCK_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(1);
    let inputs = RunInputs {
        config: args.config,
        out: args.out.unwrap_or_else(|| PathBuf::from("out")),
        threads,
        force: args.force,
    };
    match execute(kind, &inputs) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
