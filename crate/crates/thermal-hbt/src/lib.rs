//! Files, command line and parallel drivers around [`thermal_hbt_core`].

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod parallel;
pub mod plot;

pub use error::AppError;
pub use experiments::{run, Experiment, RunOptions};
pub use manifest::RunManifest;
pub use thermal_hbt_core as core;
