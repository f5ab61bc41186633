//! Command line front end for `sgld-core`: JSON experiment configuration,
//! parallel ensemble execution, and machine-readable CSV/JSON outputs.
//!
//! One experiment per process invocation. All randomness flows from the
//! single config seed (optionally overridden on the command line); no wall
//! clock or OS entropy enters anywhere, so outputs are byte-identical across
//! reruns and thread counts.
//!
//! Exit codes are a stable contract:
//!
//! | code | meaning                                             |
//! |------|-----------------------------------------------------|
//! | 0    | pass                                                |
//! | 1    | check violation / verification or threshold failure |
//! | 2    | configuration or I/O error                          |
//! | 3    | all chains diverged                                 |
//! | 4    | step size above the drift threshold 2Δ/(3K₁²)       |

pub mod commands;
pub mod config;
pub mod output;
pub mod runner;

use std::fmt;

/// Errors that terminate a command, with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; the message names the offending field.
    Config(String),
    Io(std::io::Error),
    AllDiverged,
    StepSizeTooLarge {
        lambda: f64,
        threshold: f64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::AllDiverged => 3,
            CliError::StepSizeTooLarge { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::AllDiverged => write!(f, "every chain diverged"),
            CliError::StepSizeTooLarge { lambda, threshold } => write!(
                f,
                "step size {lambda} exceeds drift threshold {threshold} (= 2Δ/(3K₁²))"
            ),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
