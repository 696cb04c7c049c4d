//! Pipeline CLI: stage-by-stage misinformation labeling over files.
//!
//! Each subcommand is one pipeline stage; stages communicate exclusively
//! through artifacts in the working directory, every write is atomic, and
//! every stage leaves a manifest recording its inputs, outputs, resolved
//! configuration, seed, and wall time.
//!
//! Exit codes: 0 success, 2 user-correctable problems (bad flags, broken
//! or missing inputs, stages run out of order), 1 unexpected failures.

pub mod cli;
pub mod config;
pub mod err;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod plot;
pub mod stages;

use std::process::ExitCode;

use clap::Parser;

pub fn run() -> ExitCode {
    // clap itself exits 2 on bad usage and 0 for --help/--version.
    let parsed = cli::Cli::parse();
    match cli::dispatch(parsed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(err::CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
