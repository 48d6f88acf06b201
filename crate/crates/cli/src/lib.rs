//! Experiment runner: TOML config in, CSV/JSON records out.

pub mod config;
pub mod record;
pub mod runner;
