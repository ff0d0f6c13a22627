//! Experiment front end for the defensive-forecasting engine: JSON run
//! configs, trace/checkpoint file formats, and the `run`/`verify`/`ingest`
//! commands behind the `defensor` binary.

pub mod config;
pub mod formats;
pub mod runner;

use std::fmt;

/// Errors mapped onto the binary's exit codes: 1 for configuration or I/O
/// problems, 2 for runtime monitor violations, 3 for a failed verification.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io {
        context: String,
        source: std::io::Error,
    },
    Runtime(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io { context, source } => write!(f, "{context}: {source}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
            CliError::Verification(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}
