//! Experiment runner for reclab-core: configuration, the built-in catalog,
//! orchestration, report files and the invariant suites.

pub mod catalog;
pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::ExperimentConfig;
pub use run::{run, RunRecord};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const CONTRADICTION: i32 = 2;
}
