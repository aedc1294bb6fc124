//! `gpn`: command-line front end for the ellipse localization toolkit.
//!
//! Exit status is 0 on success, 2 on invalid input and 3 on numerical
//! failure (divergence or a degenerate ellipse).

mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl From<gpn::Error> for CliError {
    fn from(e: gpn::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
