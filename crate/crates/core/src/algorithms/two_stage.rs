use super::{
    check_rhs, drive, initialize_support, AlgorithmConfig, Family, RecoveryState, RecoveryTrace, Step, StepOutcome,
};
use crate::error::Result;
use crate::linalg::{residual_on_support, solve_on_support, DenseMatrix};
use crate::threshold::select_top;

/// One two-stage iteration:
///
/// 1. `J = I ∪ top_l |A^T (A x − b)|` over indices outside `I`
/// 2. `z = argmin ‖A z − b‖` over `J`
/// 3. `I⁺ = supp(H_k(z))`, `x⁺ = argmin ‖A x − b‖` over `I⁺`
pub fn two_stage_step(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig, state: &RecoveryState) -> Result<Step> {
    let r = residual_on_support(a, &state.x, b, &state.support);
    let corr = a.tr_mul_vec(&r)?;
    let outside: Vec<(usize, f64)> = corr
        .into_iter()
        .enumerate()
        .filter(|(j, _)| !state.support.contains(*j))
        .collect();
    let top = select_top(outside, cfg.l);
    let merged = state.support.union(&top);
    let z = solve_on_support(a, b, &merged)?;
    let reduced = select_top(merged.iter().copied().zip(z).collect(), cfg.k);
    let next = RecoveryState::on_support(a, b, reduced, state.iteration + 1)?;
    Ok(Step {
        found: next.support.difference(&state.support),
        lost: state.support.difference(&next.support),
        merged_size: merged.len(),
        next,
        query: None,
    })
}

pub fn run_two_stage(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig) -> Result<(RecoveryState, RecoveryTrace)> {
    cfg.expect_family(Family::TwoStage)?;
    cfg.validate(a.rows(), a.cols())?;
    check_rhs(a, b)?;
    let init = initialize_support(a, b, cfg.k, &cfg.init, cfg.seed)?;
    drive(init, cfg, cfg.max_iters, |state| {
        two_stage_step(a, b, cfg, state).map(StepOutcome::Continue)
    })
}

/// CoSaMP: two-stage with `l = 2k`. `cfg.l` is overridden.
pub fn run_cosamp(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig) -> Result<(RecoveryState, RecoveryTrace)> {
    let cfg = AlgorithmConfig {
        family: Family::TwoStage,
        l: 2 * cfg.k,
        ..cfg.clone()
    };
    run_two_stage(a, b, &cfg)
}

/// Subspace pursuit: two-stage with `l = k`. `cfg.l` is overridden.
pub fn run_subspace_pursuit(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &AlgorithmConfig,
) -> Result<(RecoveryState, RecoveryTrace)> {
    let cfg = AlgorithmConfig {
        family: Family::TwoStage,
        l: cfg.k,
        ..cfg.clone()
    };
    run_two_stage(a, b, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{Init, Status};
    use crate::ensemble::MeasurementProblem;

    #[test]
    fn true_support_converges_immediately() {
        let p = MeasurementProblem::generate(30, 60, 4, 9).unwrap();
        let truth = p.truth.as_ref().unwrap();
        let cfg = AlgorithmConfig::subspace_pursuit(4).with_init(Init::Given(truth.support.clone()));
        let (state, trace) = run_two_stage(&p.a, &p.b, &cfg).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.iterations.is_empty());
        assert_eq!(state.support, truth.support);
    }

    #[test]
    fn wrappers_fix_l() {
        let p = MeasurementProblem::generate(40, 80, 4, 2).unwrap();
        let base = AlgorithmConfig::two_stage(4, 1).with_init(Init::Random).with_seed(3);
        let (_, cosamp) = run_cosamp(&p.a, &p.b, &base).unwrap();
        let (_, explicit) = run_two_stage(&p.a, &p.b, &AlgorithmConfig { l: 8, ..base.clone() }).unwrap();
        assert_eq!(cosamp, explicit);
        let (_, sp) = run_subspace_pursuit(&p.a, &p.b, &base).unwrap();
        let (_, explicit) = run_two_stage(&p.a, &p.b, &AlgorithmConfig { l: 4, ..base }).unwrap();
        assert_eq!(sp, explicit);
    }

    #[test]
    fn merged_support_has_k_plus_l() {
        let p = MeasurementProblem::generate(40, 80, 4, 6).unwrap();
        let cfg = AlgorithmConfig::two_stage(4, 3).with_init(Init::Random).with_seed(1);
        let (_, trace) = run_two_stage(&p.a, &p.b, &cfg).unwrap();
        for rec in &trace.iterations {
            assert_eq!(rec.merged_size, 7);
            assert_eq!(rec.support.len(), 4);
        }
    }
}
