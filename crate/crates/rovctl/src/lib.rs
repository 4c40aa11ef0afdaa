//! Library side of the `rovctl` binary: config schema, resolution and the
//! subcommand implementations, kept callable so tests can drive them
//! without spawning processes.

pub mod commands;
pub mod config;
pub mod error;

pub use error::CliError;
