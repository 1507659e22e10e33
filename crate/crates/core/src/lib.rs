//! Greedy sparse recovery: OMPR(l) with partial hard thresholding, OMP,
//! two-stage thresholding (CoSaMP, subspace pursuit), LSH-accelerated OMPR,
//! and per-iteration diagnostics for instances with known ground truth.
//!
//! Problems are `b = A x* + e` with `A` an `m × n` matrix of unit-norm
//! columns and `x*` a `k`-sparse vector. Every solver minimises
//! `f(x) = ½‖A x − b‖²` over `k`-sparse `x`.

pub mod algorithms;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod format;
pub mod linalg;
pub mod lsh;
pub mod rng;
pub mod threshold;

pub use algorithms::{
    run_cosamp, run_omp, run_omprl, run_subspace_pursuit, run_two_stage, AlgorithmConfig, Family, Init, RecoveryState,
    RecoveryTrace, Status,
};
pub use ensemble::{GroundTruth, MeasurementProblem};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SupportSet};
pub use lsh::{build_index, run_ompr_hash, Fallback, LshIndex};
pub use threshold::{hard_threshold, partial_hard_threshold, ThresholdResult};
