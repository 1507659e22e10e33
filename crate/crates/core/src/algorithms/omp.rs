use super::{check_rhs, drive, AlgorithmConfig, Family, RecoveryState, RecoveryTrace, Status, Step, StepOutcome};
use crate::error::Result;
use crate::linalg::{norm_sq, residual_on_support, DenseMatrix, SupportSet};

/// Adds the column most correlated with the residual, then re-solves.
/// Returns `None` when every column outside the support is orthogonal to the
/// residual.
pub fn omp_step(a: &DenseMatrix, b: &[f64], state: &RecoveryState) -> Result<Option<Step>> {
    let r = residual_on_support(a, &state.x, b, &state.support);
    let corr = a.tr_mul_vec(&r)?;
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in corr.iter().enumerate() {
        if state.support.contains(j) {
            continue;
        }
        if best.is_none_or(|(_, v)| c.abs() > v) {
            best = Some((j, c.abs()));
        }
    }
    let Some((j, _)) = best.filter(|(_, v)| *v > 0.0) else {
        return Ok(None);
    };
    let added = SupportSet::from_sorted(vec![j]);
    let support = state.support.union(&added);
    let merged_size = support.len();
    let next = RecoveryState::on_support(a, b, support, state.iteration + 1)?;
    Ok(Some(Step {
        next,
        found: added,
        lost: SupportSet::empty(),
        merged_size,
        query: None,
    }))
}

/// Orthogonal matching pursuit from the empty support; at most `k` iterations.
pub fn run_omp(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig) -> Result<(RecoveryState, RecoveryTrace)> {
    cfg.expect_family(Family::Omp)?;
    cfg.validate(a.rows(), a.cols())?;
    check_rhs(a, b)?;
    let init = RecoveryState {
        x: vec![0.0; a.cols()],
        support: SupportSet::empty(),
        objective: 0.5 * norm_sq(b),
        iteration: 0,
    };
    drive(init, cfg, cfg.k, |state| {
        Ok(match omp_step(a, b, state)? {
            Some(step) => StepOutcome::Continue(step),
            None => StepOutcome::Halt(Status::Stalled),
        })
    })
}
