//! `qcascade`: scan, factorize and verify delayed-feedback quantum networks.
//!
//! Exit codes: 0 on success, 2 when an assumption is violated or the input is
//! invalid, 3 on numerical failures and failed checks.

mod checks;
mod config;
mod output;
mod run;

use clap::Parser;
use std::path::Path;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Assumption(String),
    #[error("{0}")]
    Core(#[from] qcascade_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("writing output: {0}")]
    Output(String),
    #[error("checks failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) | CliError::Assumption(_) => 2,
            CliError::Core(e) if e.is_assumption() => 2,
            _ => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("QCASCADE_LOG", "warn")).init();
    let args = config::Args::parse();
    let outcome = config::RunConfig::from_args(args).and_then(|cfg| run::run(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qcascade: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
