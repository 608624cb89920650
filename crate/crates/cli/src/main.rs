//! `sbc`: dynamic programming oracle, Monte-Carlo simulation, certificate
//! checking, SOS synthesis and table regeneration for polynomial stochastic
//! systems.

mod cmd;
mod common;
mod config;
mod error;
mod published;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, Outcome};

/// Environment variable setting the worker thread count.
const THREADS_ENV: &str = "SBC_THREADS";

#[derive(Parser)]
#[command(
    name = "sbc",
    version,
    about = "Barrier certificates for finite-horizon stochastic safety"
)]
struct Cli {
    /// JSON settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Safety and reach-avoid probabilities by grid value iteration.
    Dp(cmd::dp::DpArgs),
    /// Monte-Carlo estimate with a 99% Wilson interval.
    Mc(cmd::mc::McArgs),
    /// Check a certificate file on samples; exit 1 if a condition fails.
    Check(cmd::check::CheckArgs),
    /// Synthesize certificates over a list of alpha values.
    Synthesize(cmd::synth::SynthArgs),
    /// Regenerate tables I to IV as CSV next to the published values.
    Tables(cmd::tables::TablesArgs),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_ENV}={text:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = cli.config.as_deref();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Dp(a) => cmd::dp::run(a, config),
        Command::Mc(a) => cmd::mc::run(a, config),
        Command::Check(a) => cmd::check::run(a, config),
        Command::Synthesize(a) => cmd::synth::run(a, config),
        Command::Tables(a) => cmd::tables::run(a, config),
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sbc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
