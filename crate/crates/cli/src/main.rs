//! `piqsim`: trajectories, pulse sweeps, motional decay rates and oracle
//! checks for cooperative emission of `N` two-level atoms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::{EvolveArgs, MeanfieldArgs, OracleArgs, RatesArgs, SweepArgs};

#[derive(Debug, Parser)]
#[command(name = "piqsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radiated energy rate, <J_z> and populations along one trajectory.
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Pulse height, delay and emitted energy over a grid of N and dgamma.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Decay rate gamma and dipole-dipole shift of a motional state.
    #[command(allow_negative_numbers = true)]
    Rates(RatesArgs),
    /// Compare the solver with brute-force full-space evolution (N <= 6).
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Closed-form mean-field pulse.
    #[command(allow_negative_numbers = true)]
    Meanfield(MeanfieldArgs),
}

/// Exit codes.
const VALIDATION: u8 = 1;
const CAPACITY: u8 = 2;
const NUMERICAL: u8 = 3;

/// A computation finished but its results flag a numerical failure.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use piqsim_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Capacity { .. } => CAPACITY,
                E::Integration { .. } | E::Convergence { .. } => NUMERICAL,
                _ => VALIDATION,
            };
        }
        if cause.downcast_ref::<NumericalFailure>().is_some() {
            return NUMERICAL;
        }
    }
    VALIDATION
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PIQSIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("PIQSIM_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot configure the worker pool")
}

/// Write the finished output in one go, to a file or to stdout.
fn emit(output: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let (output, result) = match cli.command {
        Command::Evolve(a) => commands::evolve(a)?,
        Command::Sweep(a) => commands::sweep(a)?,
        Command::Rates(a) => commands::rates(a)?,
        Command::Oracle(a) => commands::oracle(a)?,
        Command::Meanfield(a) => commands::meanfield(a)?,
    };
    emit(output.as_ref(), &result.bytes)?;
    if let Some(failure) = result.failure {
        bail!(NumericalFailure(failure));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
