use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide error type.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Invalid configuration or parameter; the message names the offending field.
    Config(String),
    /// A vector had the wrong length for the operation.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    /// The step size is above the drift threshold 2Δ/(3K₁²), so no drift
    /// certificate with γ < 1 exists.
    StepSizeTooLarge { lambda: f64, threshold: f64 },
    /// The update function returned a non-finite value; carries the state at
    /// which it blew up.
    NonFiniteDrift { theta: Vec<f64> },
    /// A moment estimator hit a non-finite value at the given sample index.
    NonFiniteSample { index: usize },
    /// The noise model has no usable density (e.g. the degenerate zero kind),
    /// so no minorization certificate can be built from it.
    UnsupportedNoise(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DimensionMismatch {
                context,
                expected,
                actual,
            } => write!(
                f,
                "dimension mismatch in {context}: expected {expected}, got {actual}"
            ),
            Error::StepSizeTooLarge { lambda, threshold } => write!(
                f,
                "step size {lambda} exceeds drift threshold {threshold} (= 2Δ/(3K₁²))"
            ),
            Error::NonFiniteDrift { theta } => {
                write!(
                    f,
                    "update function returned a non-finite value at θ = {theta:?}"
                )
            }
            Error::NonFiniteSample { index } => {
                write!(f, "non-finite value at sample index {index}")
            }
            Error::UnsupportedNoise(what) => write!(f, "unsupported noise model: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
