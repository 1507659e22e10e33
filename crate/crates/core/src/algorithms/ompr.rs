use super::{
    check_rhs, drive, initialize_support, AlgorithmConfig, Family, RecoveryState, RecoveryTrace, Step, StepOutcome,
};
use crate::error::Result;
use crate::linalg::{residual_on_support, DenseMatrix};
use crate::threshold::partial_hard_threshold;

/// One OMPR(l) iteration from `state`:
///
/// 1. `z = x + η A^T (b − A x)`
/// 2. `y = H_k(z; I, l)`
/// 3. `x⁺ = argmin ‖A x − b‖` over `supp(y)`
pub fn omprl_step(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig, state: &RecoveryState) -> Result<Step> {
    let r = residual_on_support(a, &state.x, b, &state.support);
    let mut z = a.tr_mul_vec(&r)?;
    for (zj, xj) in z.iter_mut().zip(&state.x) {
        *zj = xj + cfg.eta * *zj;
    }
    let th = partial_hard_threshold(&z, &state.support, cfg.l, cfg.k)?;
    let next = RecoveryState::on_support(a, b, th.support, state.iteration + 1)?;
    Ok(Step {
        next,
        found: th.found,
        lost: th.lost,
        merged_size: cfg.k + cfg.l,
        query: None,
    })
}

/// Runs OMPR(l) until `f ≤ tol`, the iteration budget runs out, or the
/// support stops changing.
pub fn run_omprl(a: &DenseMatrix, b: &[f64], cfg: &AlgorithmConfig) -> Result<(RecoveryState, RecoveryTrace)> {
    cfg.expect_family(Family::OmprL)?;
    cfg.validate(a.rows(), a.cols())?;
    check_rhs(a, b)?;
    let init = initialize_support(a, b, cfg.k, &cfg.init, cfg.seed)?;
    drive(init, cfg, cfg.max_iters, |state| {
        omprl_step(a, b, cfg, state).map(StepOutcome::Continue)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{Init, Status};
    use crate::ensemble::MeasurementProblem;
    use crate::linalg::SupportSet;

    #[test]
    fn identity_swap_trace() {
        let a = DenseMatrix::identity(4);
        let b = [0.0, 1.0, 0.0, 1.0];
        let cfg = AlgorithmConfig::ompr(2).with_init(Init::Given(SupportSet::new(vec![0, 1]).unwrap()));
        let (state, trace) = run_omprl(&a, &b, &cfg).unwrap();
        assert_eq!(state.support.as_slice(), &[1, 3]);
        assert_eq!(state.x, b.to_vec());
        assert_eq!(state.objective, 0.0);
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.iterations.len() <= 2);
        assert_eq!(trace.iterations[0].found.as_slice(), &[3]);
        assert_eq!(trace.iterations[0].lost.as_slice(), &[0]);
    }

    #[test]
    fn correct_initial_support_converges_immediately() {
        let p = MeasurementProblem::generate(30, 80, 5, 11).unwrap();
        let truth = p.truth.as_ref().unwrap();
        let cfg = AlgorithmConfig::ompr(5).with_init(Init::Given(truth.support.clone()));
        let (state, trace) = run_omprl(&p.a, &p.b, &cfg).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.iterations.is_empty());
        assert!(state.objective <= 1e-20);
    }

    #[test]
    fn wrong_family_is_rejected() {
        let a = DenseMatrix::identity(3);
        assert!(run_omprl(&a, &[1.0, 0.0, 0.0], &AlgorithmConfig::omp(1)).is_err());
    }
}
