//! Command-line front end for `cliffcert`: configuration, subcommands and
//! report output.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{certify, run, Cli, Command};
pub use config::RunConfig;
pub use error::CliError;
