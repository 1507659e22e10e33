//! Greedy recovery algorithms.
//!
//! * [`run_omprl`]: OMPR(l). `l = 1` is OMPR, `l = k` is IHT-Newton (HTP).
//! * [`run_omp`]: classic orthogonal matching pursuit.
//! * [`run_two_stage`]: two-stage thresholding; `l = 2k` is CoSaMP, `l = k` is
//!   subspace pursuit.
//!
//! Every algorithm keeps its iterate equal to the least-squares solution on
//! its current support, so `A_I^T (A x − b) ≈ 0` after each step.

mod config;
mod omp;
mod ompr;
mod two_stage;

pub use config::{AlgorithmConfig, Family, Init, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use omp::{omp_step, run_omp};
pub use ompr::{omprl_step, run_omprl};
pub use two_stage::{run_cosamp, run_subspace_pursuit, run_two_stage, two_stage_step};

use rand::seq::index;

use crate::error::{bad_args, mismatch, Result};
use crate::linalg::{least_squares_on_support, norm_sq, residual_on_support, DenseMatrix, SupportSet};
use crate::lsh::QueryReport;
use crate::rng::Stream;
use crate::threshold::select_top;

/// Relative objective decrease below which an unchanged support counts as a stall.
pub const STALL_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryState {
    /// Current iterate; zero outside `support`.
    pub x: Vec<f64>,
    pub support: SupportSet,
    /// `½‖A x − b‖²`.
    pub objective: f64,
    /// Number of completed iterations.
    pub iteration: usize,
}

impl RecoveryState {
    /// Least-squares iterate on `support`.
    pub fn on_support(a: &DenseMatrix, b: &[f64], support: SupportSet, iteration: usize) -> Result<Self> {
        let x = least_squares_on_support(a, b, &support)?;
        let r = residual_on_support(a, &x, b, &support);
        Ok(Self {
            x,
            support,
            objective: 0.5 * norm_sq(&r),
            iteration,
        })
    }

    /// `‖A x − b‖`.
    pub fn residual_norm(&self) -> f64 {
        (2.0 * self.objective).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    /// Objective reached the configured tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// Support unchanged without meaningful decrease, or no usable candidate.
    Stalled,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub support: SupportSet,
    pub objective: f64,
    pub found: SupportSet,
    pub lost: SupportSet,
    /// Size of the enlarged support before reduction back to `k`.
    pub merged_size: usize,
    /// Candidate-retrieval report for hashed selection.
    pub query: Option<QueryReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryTrace {
    pub initial_support: SupportSet,
    pub initial_objective: f64,
    pub iterations: Vec<IterationRecord>,
    pub status: Status,
}

impl RecoveryTrace {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_objective).chain(self.iterations.iter().map(|r| r.objective))
    }
}

/// One algorithm step: the next state plus support bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next: RecoveryState,
    pub found: SupportSet,
    pub lost: SupportSet,
    pub merged_size: usize,
    pub query: Option<QueryReport>,
}

/// What the driver should do with a step.
pub(crate) enum StepOutcome {
    Continue(Step),
    Halt(Status),
}

/// Starting iterate with `|support| = k`, solved by least squares.
pub fn initialize_support(a: &DenseMatrix, b: &[f64], k: usize, init: &Init, seed: u64) -> Result<RecoveryState> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(mismatch(format!("A has {m} rows, b has length {}", b.len())));
    }
    if k > m || k > n {
        return Err(bad_args(format!("k = {k} exceeds matrix shape {m}x{n}")));
    }
    let support = match init {
        Init::TopkCorrelation => {
            let corr = a.tr_mul_vec(b)?;
            select_top(corr.into_iter().enumerate().collect(), k)
        }
        Init::Random => {
            let mut rng = Stream::Init.rng(seed);
            SupportSet::from_unsorted(index::sample(&mut rng, n, k).into_vec())
        }
        Init::Given(s) => {
            if s.len() != k || s.bound() > n {
                return Err(bad_args(format!(
                    "initial support must hold {k} indices below {n}, got {{{s}}}"
                )));
            }
            s.clone()
        }
    };
    RecoveryState::on_support(a, b, support, 0)
}

/// Shared iteration loop with the tolerance, budget and stall rules.
pub(crate) fn drive<F>(
    initial: RecoveryState,
    cfg: &AlgorithmConfig,
    max_iters: usize,
    mut step: F,
) -> Result<(RecoveryState, RecoveryTrace)>
where
    F: FnMut(&RecoveryState) -> Result<StepOutcome>,
{
    let mut trace = RecoveryTrace {
        initial_support: initial.support.clone(),
        initial_objective: initial.objective,
        iterations: Vec::new(),
        status: Status::MaxIters,
    };
    let mut state = initial;
    if state.objective <= cfg.tol {
        trace.status = Status::Converged;
        return Ok((state, trace));
    }
    for _ in 0..max_iters {
        let step = match step(&state)? {
            StepOutcome::Continue(step) => step,
            StepOutcome::Halt(status) => {
                trace.status = status;
                return Ok((state, trace));
            }
        };
        let unchanged = step.next.support == state.support;
        let decrease = state.objective - step.next.objective;
        let previous = state.objective;
        trace.iterations.push(IterationRecord {
            iteration: step.next.iteration,
            support: step.next.support.clone(),
            objective: step.next.objective,
            found: step.found,
            lost: step.lost,
            merged_size: step.merged_size,
            query: step.query,
        });
        state = step.next;
        if state.objective <= cfg.tol {
            trace.status = Status::Converged;
            return Ok((state, trace));
        }
        if unchanged && decrease < STALL_TOLERANCE * previous {
            trace.status = Status::Stalled;
            return Ok((state, trace));
        }
    }
    trace.status = Status::MaxIters;
    Ok((state, trace))
}

pub(crate) fn check_rhs(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("A has {} rows, b has length {}", a.rows(), b.len())));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(bad_args("b has non-finite entries"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_init_on_identity() {
        let a = DenseMatrix::identity(4);
        let s = initialize_support(&a, &[0.0, 0.0, 1.0, 0.0], 1, &Init::TopkCorrelation, 0).unwrap();
        assert_eq!(s.support.as_slice(), &[2]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn random_init_is_deterministic() {
        let p = crate::ensemble::MeasurementProblem::generate(20, 50, 4, 3).unwrap();
        let s1 = initialize_support(&p.a, &p.b, 4, &Init::Random, 77).unwrap();
        let s2 = initialize_support(&p.a, &p.b, 4, &Init::Random, 77).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.support.len(), 4);
    }

    #[test]
    fn given_init_must_have_k_elements() {
        let a = DenseMatrix::identity(3);
        let bad = Init::Given(SupportSet::new(vec![0]).unwrap());
        assert!(initialize_support(&a, &[1.0, 1.0, 1.0], 2, &bad, 0).is_err());
    }
}
