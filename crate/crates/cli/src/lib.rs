//! Experiment runner around the estimation library: configuration parsing,
//! the subcommand registry, and result persistence.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
