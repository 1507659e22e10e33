use std::time::Instant;

use ompr_core::algorithms::{run_omp, run_omprl, run_two_stage, RecoveryState, RecoveryTrace};
use ompr_core::ensemble::MeasurementProblem;
use ompr_core::linalg::norm;
use ompr_core::lsh::{build_index, default_bits, default_tables, run_ompr_hash, LshIndex};

use crate::spec::{AlgorithmSpec, SolverFamily};

/// Result of one algorithm on one problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// `‖x − x*‖ / ‖x*‖`; `None` without ground truth or on solver error.
    pub rel_err: Option<f64>,
    /// `‖A x − b‖`; `None` on solver error.
    pub resid: Option<f64>,
    pub iterations: usize,
    /// Terminal status, or `error`.
    pub status: &'static str,
    /// Objective never increased by more than `1e-9` relative.
    pub monotone: bool,
    /// Solver wall time in seconds, index construction excluded.
    pub time_s: f64,
}

impl Outcome {
    fn failed() -> Self {
        Self {
            rel_err: None,
            resid: None,
            iterations: 0,
            status: "error",
            monotone: false,
            time_s: 0.0,
        }
    }

    pub fn succeeded(&self, threshold: f64) -> bool {
        self.rel_err.is_some_and(|e| e <= threshold)
    }
}

/// Builds the index a hashed solver needs, with the trial seed.
pub fn index_for(spec: &AlgorithmSpec, problem: &MeasurementProblem, seed: u64) -> ompr_core::Result<Option<LshIndex>> {
    if spec.family != SolverFamily::OmprHash {
        return Ok(None);
    }
    let n = problem.cols();
    let s = spec.bits.unwrap_or_else(|| default_bits(n));
    let q = spec.tables.unwrap_or_else(|| default_tables(n));
    build_index(&problem.a, s, q, seed).map(Some)
}

/// Runs the solver described by `spec` for sparsity `k`.
pub fn run_spec(
    spec: &AlgorithmSpec,
    problem: &MeasurementProblem,
    k: usize,
    seed: u64,
    index: Option<&LshIndex>,
) -> ompr_core::Result<(RecoveryState, RecoveryTrace)> {
    let cfg = spec.config(k, seed);
    let (a, b) = (&problem.a, &problem.b);
    match spec.family {
        SolverFamily::OmprL => run_omprl(a, b, &cfg),
        SolverFamily::Omp => run_omp(a, b, &cfg),
        SolverFamily::TwoStage => run_two_stage(a, b, &cfg),
        SolverFamily::OmprHash => {
            let index =
                index.ok_or_else(|| ompr_core::Error::BadArguments("hashed selection needs an index".into()))?;
            run_ompr_hash(a, b, &cfg, index, spec.fallback())
        }
    }
}

/// Builds any needed index, then times and summarises one solve. Solver
/// errors become an `error` outcome instead of propagating.
pub fn solve(spec: &AlgorithmSpec, problem: &MeasurementProblem, k: usize, seed: u64) -> Outcome {
    let index = match index_for(spec, problem, seed) {
        Ok(index) => index,
        Err(e) => {
            log::warn!("{}: index construction failed for seed {seed}: {e}", spec.label);
            return Outcome::failed();
        }
    };
    let start = Instant::now();
    let result = run_spec(spec, problem, k, seed, index.as_ref());
    let time_s = start.elapsed().as_secs_f64();
    match result {
        Ok((state, trace)) => {
            let objectives: Vec<f64> = trace.objectives().collect();
            let monotone = objectives.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
            let r: Vec<f64> = problem
                .a
                .mul_on_support(&state.x, &state.support)
                .iter()
                .zip(&problem.b)
                .map(|(ax, b)| ax - b)
                .collect();
            Outcome {
                rel_err: problem.relative_error(&state.x),
                resid: Some(norm(&r)),
                iterations: trace.iterations.len(),
                status: trace.status.as_str(),
                monotone,
                time_s,
            }
        }
        Err(e) => {
            log::warn!("{}: solver failed for seed {seed}: {e}", spec.label);
            Outcome::failed()
        }
    }
}
