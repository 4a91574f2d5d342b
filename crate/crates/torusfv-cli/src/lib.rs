//! Batch front door for the torus finite volume solver.
//!
//! Exposed as a library so integration tests (and embedding tools) can
//! drive the same command implementations as the `torusfv` binary.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod presets;

pub use commands::{
    check_command, consistency_command, run_command, study_command, CliError,
};
