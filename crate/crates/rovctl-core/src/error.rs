//! Error type shared across the crate.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a precondition (bad dimension, non-positive gain, ...).
    InvalidParameter(String),
    /// The input-gain term of the generic control law is zero.
    SingularGain,
    /// A simulation or network configuration failed validation; the message
    /// names the offending field.
    InvalidConfig(String),
    /// A run was aborted because the state left the trusted numerical range.
    Diverged { t: f64, detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::SingularGain => write!(f, "control input gain b is zero"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Diverged { t, detail } => {
                write!(f, "simulation diverged at t = {t:.6} s: {detail}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
