//! Experiment runner behind the `fieldbridge` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod specs;

pub use error::CliError;
