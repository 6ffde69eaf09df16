//! File formats and commands of the `panolayout` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
