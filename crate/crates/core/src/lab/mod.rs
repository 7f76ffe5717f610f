//! Experiment orchestration: configs, reports, and the experiment drivers.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run;
pub use report::{Report, Verdict};
