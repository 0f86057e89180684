//! File formats, reports and subcommands behind the `subspace` binary.

pub mod args;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod edgelist;
pub mod error;
pub mod manifest;
pub mod report;

pub use error::{CliError, Result};
