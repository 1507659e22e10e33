//! Experiment harness: JSON experiment descriptions, deterministic parallel
//! trial execution, CSV and SVG output, and the `ompr` command line.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod output;
pub mod solve;
pub mod spec;

pub use error::{HarnessError, Result};
pub use spec::{AlgorithmSpec, ExperimentSpec, Kind};
