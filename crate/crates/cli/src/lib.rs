//! Experiment front end for `apg-restart`: runs configured solver grids,
//! checks the convergence invariants and compares restart schemes.

pub mod commands;
pub mod config;
pub mod output;
pub mod runner;

pub use commands::{check, check_with_hook, compare, run, Options};
pub use config::{ConfigError, ExperimentConfig, SCHEMA_VERSION};
