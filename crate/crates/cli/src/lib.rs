//! Command-line driver for the corpus pipeline: one subcommand per stage,
//! each writing JSONL or window artifacts plus a run manifest sidecar.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod synth;

pub use app::{run, Cli};
pub use error::{CliError, Result};
