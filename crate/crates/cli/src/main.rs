//! Command line for the token router: single-instance selection, the
//! synthetic benchmark battery, fixed-fidelity token demand, and the
//! paired sign test.
//!
//! Exit codes: 0 on success, 2 for input errors (files, formats, flags),
//! 3 for domain errors raised by the algorithms.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{bench, demand, select, signtest, CliError};

#[derive(Parser)]
#[command(
    name = "f3a",
    version,
    about = "Budgeted visual token selection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select tokens for one instance file against a tensor container.
    Select(select::SelectArgs),
    /// Run the synthetic planted-evidence battery and optional sweeps.
    Bench(bench::BenchArgs),
    /// Fixed-fidelity token demand from a retention-curve table.
    Demand(demand::DemandArgs),
    /// Two-sided exact binomial sign test.
    Signtest(signtest::SignTestArgs),
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("F3A_THREADS") {
        let threads: usize = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
            CliError::input(format!(
                "F3A_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_threads().and_then(|()| match cli.command {
        Command::Select(args) => select::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Demand(args) => demand::run(args),
        Command::Signtest(args) => signtest::run(args),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
