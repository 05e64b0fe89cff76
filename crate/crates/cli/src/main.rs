//! `chansel`: solve, verify and simulate channel-selection instances.
//!
//! Exit codes: 0 success (or verdict holds), 2 usage or parse error,
//! 3 verdict violated, 4 solver precondition failed.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::InstanceArgs;
use crate::error::CliError;
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(
    name = "chansel",
    version,
    about = "Myopic and optimal channel selection over identical Gilbert-Elliott channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add wall-clock time to the report (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal value: finite horizon, discounted, or average reward (beta = 1, horizon inf).
    Solve(commands::SolveArgs),
    /// Check that the myopic rule is optimal at every reachable state.
    Verify(InstanceArgs),
    /// Randomized sweeps of the myopic-value inequalities.
    Lemmas(commands::LemmaArgs),
    /// Monte Carlo estimate of a policy's reward, optionally paired with a second policy.
    Simulate(commands::SimulateArgs),
    /// Verify the built-in four-channel counterexample.
    Counterexample,
    /// Search stationary-start instances for myopic suboptimality.
    SearchStationary(commands::SearchArgs),
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let start = Instant::now();
    let (mut report, code) = match &cli.command {
        Command::Solve(a) => commands::solve(a)?,
        Command::Verify(a) => commands::verify(a)?,
        Command::Lemmas(a) => commands::lemmas(a)?,
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Counterexample => commands::counterexample()?,
        Command::SearchStationary(a) => commands::search_stationary(a)?,
    };
    if cli.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let text = report.render(cli.format)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
