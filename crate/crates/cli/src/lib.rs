//! Experiment runner for the rarepdmp estimators: configuration files,
//! replicated runs, result tables and the self-check suite.

pub mod config;
pub mod experiment;
pub mod output;
pub mod selfcheck;
pub mod tables;

/// Environment variable giving the default worker count.
pub const WORKERS_ENV: &str = "RAREPDMP_WORKERS";
