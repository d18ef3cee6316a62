//! `penred`: analyze operator pencils from the command line.
//!
//! Exit codes: 0 success, 2 malformed input, 3 internal or numerical
//! inconsistency. Reports are canonical JSON; stdout carries the text
//! summary (or the report itself with `--format json`), never stderr.

mod commands;
mod summary;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "penred",
    version,
    about = "Structural analysis of operator pencils (E, A)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis: defects, normality, commutativity, resolvent samples.
    Analyze(commands::AnalyzeArgs),
    /// Apply observation or control reductions and write the reduced pencil.
    Reduce(commands::ReduceArgs),
    /// Check the commutativity of the two reductions.
    Commute(commands::CommuteArgs),
    /// Sample the generalized resolvent; eigenvalues of regular pencils.
    Spectrum(commands::SpectrumArgs),
    /// Saddle-point tooling: inf-sup constant, reduction ladder, solve.
    Saddle(commands::SaddleArgs),
    /// Synthesize a pencil from Kronecker blocks.
    Synth(commands::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => commands::analyze(args),
        Command::Reduce(args) => commands::reduce(args),
        Command::Commute(args) => commands::commute(args),
        Command::Spectrum(args) => commands::spectrum(args),
        Command::Saddle(args) => commands::saddle(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
