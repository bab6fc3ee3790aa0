//! Library backing the `thibeam` command-line pipeline.
//!
//! The binary in `main.rs` is a thin argument-parsing wrapper over these
//! modules so that integration tests can drive the same code paths in
//! process.

pub mod config;
pub mod pipeline;
pub mod render;
pub mod rfio;
pub mod sweep;

use std::fmt;

/// Process-level failure classes, each mapped to a distinct exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed configuration, or out-of-range parameters (exit 2).
    Invalid(String),
    /// Numerical or measurement failures in the processing chain (exit 3).
    Numerical(String),
    /// Filesystem and serialization failures (exit 4).
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid argument: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<thibeam::Error> for CliError {
    fn from(e: thibeam::Error) -> Self {
        match e {
            thibeam::Error::InvalidArgument(m) => CliError::Invalid(m),
            thibeam::Error::NumericalFailure(m) => CliError::Numerical(m),
            thibeam::Error::MeasurementFailure(m) => {
                CliError::Numerical(format!("measurement: {m}"))
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(format!("JSON: {e}"))
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
