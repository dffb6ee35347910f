//! Library side of the `ehcr` command: configuration, sweeps, the
//! validation suite and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod validate;

pub use config::{Config, ModeSelection};
pub use error::CliError;
