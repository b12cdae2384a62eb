//! Experiment harness: configuration, runs, plots and oracle checks on top of `cpg_core`.

pub mod config;
pub mod plot;
pub mod run;
pub mod verify;
