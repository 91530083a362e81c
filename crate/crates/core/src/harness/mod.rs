//! Seeded Monte Carlo experiments and self-checks.

pub mod config;
pub mod experiments;
pub mod selftest;

pub use config::{standard_families, Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Method, Report};
