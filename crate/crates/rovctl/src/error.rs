//! CLI errors carrying their process exit code: 2 for configuration
//! problems, 3 for numerical divergence, 1 for anything else.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Divergence(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Divergence(msg) => write!(f, "numerical divergence: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rovctl_core::Error> for CliError {
    fn from(err: rovctl_core::Error) -> Self {
        match &err {
            rovctl_core::Error::Diverged { .. } => CliError::Divergence(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}
