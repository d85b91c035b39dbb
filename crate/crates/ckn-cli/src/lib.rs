//! Command-line driver: configuration, file formats and the three commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{Cli, RunConfig};
pub use error::{CliError, CliResult};
