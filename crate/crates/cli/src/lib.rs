//! Front end for the `llns` binary: argument parsing, commands, manifests
//! and the verification suite.

pub mod checks;
pub mod commands;
pub mod manifest;

pub use commands::{run, Cli, CliError};
