//! Experiment harness for overbooked sparse tiling: workload loading,
//! sweeps, reports and buffer trace export.

pub mod error;
pub mod experiment;
pub mod mtx;
pub mod report;
pub mod trace;
pub mod workload;

pub use error::CliError;
