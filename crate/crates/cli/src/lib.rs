//! File formats and pipeline stages behind the `uqst` command.

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod frames;

pub use error::{CliError, Result};
