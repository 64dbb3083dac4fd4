mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Primal-dual fixed-point solvers for f1(x) + f2(Bx) + f3(x).
#[derive(Parser)]
#[command(name = "pdfp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured problem, solve it and write history.csv and solution.csv.
    Solve { config: PathBuf },
    /// Run every labelled solver section on the shared problem and write compare.csv.
    Compare { config: PathBuf },
    /// Solve over a grid of step sizes and write sweep.csv.
    Sweep { config: PathBuf },
    /// Print beta, lambda_max(BB^T) and admissible step sizes; check the configured pair.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config } => commands::run_solve(config),
        Command::Compare { config } => commands::run_compare(config),
        Command::Sweep { config } => commands::run_sweep(config),
        Command::Validate { config } => commands::run_validate(config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("pdfp: {f}");
            ExitCode::from(f.code)
        }
    }
}
