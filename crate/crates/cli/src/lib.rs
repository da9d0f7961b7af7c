//! Library side of the `cumulant` command-line runner.

pub mod config;
pub mod output;
pub mod run;

use std::fmt;

/// Failure categories, each with its own process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Invariant(_) => "invariant",
            CliError::Io(_) => "io",
        }
    }

    /// Classifies a library error raised while building the run.
    pub(crate) fn setup(e: cumulant::error::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if e.is_invariant_violation() {
            CliError::Invariant(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }

    /// Classifies a library error raised while propagating.
    pub(crate) fn runtime(e: cumulant::error::Error) -> Self {
        if e.is_invariant_violation() {
            CliError::Invariant(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
