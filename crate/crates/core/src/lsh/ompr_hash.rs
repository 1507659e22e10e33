use super::{query_max_abs_correlation, LshIndex, QueryReport};
use crate::algorithms::{
    check_rhs, drive, initialize_support, AlgorithmConfig, Family, RecoveryState, RecoveryTrace, Status, Step,
    StepOutcome,
};
use crate::error::{bad_args, Result};
use crate::linalg::{dot, residual_on_support, DenseMatrix, SupportSet};
use crate::threshold::select_top;

/// What to do when the index yields no usable candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Fallback {
    /// Scan every column; also used to confirm an apparent stall.
    #[default]
    Exact,
    /// Stop with [`Status::Stalled`].
    Skip,
}

impl std::str::FromStr for Fallback {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "skip" => Ok(Self::Skip),
            other => Err(bad_args(format!("unknown fallback `{other}`"))),
        }
    }
}

/// `argmax_{j ∉ exclude} |⟨A_j, r⟩|`, lowest index on ties; `None` if every
/// such correlation is zero.
fn exact_best(a: &DenseMatrix, r: &[f64], exclude: &SupportSet) -> Result<Option<(usize, f64)>> {
    let corr = a.tr_mul_vec(r)?;
    let outside: Vec<(usize, f64)> = corr
        .into_iter()
        .enumerate()
        .filter(|(j, _)| !exclude.contains(*j))
        .collect();
    let Some(&j) = select_top(outside, 1).as_slice().first() else {
        return Ok(None);
    };
    let c = dot(a.column(j), r).abs();
    Ok((c > 0.0).then_some((j, c)))
}

/// OMPR step restricted to `I ∪ {j}`: only `z_I` and `z_j` are formed.
fn swap_step(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &AlgorithmConfig,
    state: &RecoveryState,
    r: &[f64],
    j: usize,
) -> Result<Step> {
    let mut z: Vec<(usize, f64)> = state
        .support
        .iter()
        .map(|&i| (i, state.x[i] + cfg.eta * dot(a.column(i), r)))
        .collect();
    z.push((j, cfg.eta * dot(a.column(j), r)));
    let kept = select_top(z, cfg.k);
    let next = RecoveryState::on_support(a, b, kept, state.iteration + 1)?;
    Ok(Step {
        found: next.support.difference(&state.support),
        lost: state.support.difference(&next.support),
        merged_size: cfg.k + 1,
        next,
        query: None,
    })
}

fn hashed_step(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &AlgorithmConfig,
    index: &LshIndex,
    fallback: Fallback,
    state: &RecoveryState,
) -> Result<StepOutcome> {
    let r = residual_on_support(a, &state.x, b, &state.support);
    let (hit, mut report) = query_max_abs_correlation(index, a, &r, &state.support);
    let usable = hit.filter(|_| report.abs_correlation > 0.0);

    let j = match (usable, fallback) {
        (Some(j), _) => j,
        (None, Fallback::Skip) => return Ok(StepOutcome::Halt(Status::Stalled)),
        (None, Fallback::Exact) => match exact_best(a, &r, &state.support)? {
            Some((j, c)) => {
                mark_exact(&mut report, j, c, &r);
                j
            }
            None => return Ok(StepOutcome::Halt(Status::Stalled)),
        },
    };
    let mut step = swap_step(a, b, cfg, state, &r, j)?;

    if step.found.is_empty() && fallback == Fallback::Exact && !report.exact_fallback_used {
        if let Some((best, c)) = exact_best(a, &r, &state.support)? {
            if best != j {
                mark_exact(&mut report, best, c, &r);
                step = swap_step(a, b, cfg, state, &r, best)?;
            }
        }
    }
    step.query = Some(report);
    Ok(StepOutcome::Continue(step))
}

fn mark_exact(report: &mut QueryReport, j: usize, c: f64, r: &[f64]) {
    report.chosen = Some(j);
    report.exact_fallback_used = true;
    report.abs_correlation = c;
    report.similarity = c / crate::linalg::norm(r);
}

/// OMPR with the entering column chosen by an LSH query on the residual.
///
/// `cfg` must describe OMPR(1). With [`Fallback::Exact`] a run only stalls
/// when the exact best column cannot enter the support either, so it halts at
/// the same kind of fixed point as exact OMPR.
pub fn run_ompr_hash(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &AlgorithmConfig,
    index: &LshIndex,
    fallback: Fallback,
) -> Result<(RecoveryState, RecoveryTrace)> {
    if cfg.family != Family::OmprL || cfg.l != 1 {
        return Err(bad_args("hashed selection supports OMPR(1) only"));
    }
    cfg.validate(a.rows(), a.cols())?;
    check_rhs(a, b)?;
    if index.dim() != a.rows() || index.len() != a.cols() {
        return Err(bad_args(format!(
            "index covers {}x{} but A is {}x{}",
            index.dim(),
            index.len(),
            a.rows(),
            a.cols()
        )));
    }
    let init = initialize_support(a, b, cfg.k, &cfg.init, cfg.seed)?;
    drive(init, cfg, cfg.max_iters, |state| {
        hashed_step(a, b, cfg, index, fallback, state)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run_omprl, Init};
    use crate::ensemble::MeasurementProblem;
    use crate::lsh::build_index;

    #[test]
    fn recovers_like_exact_ompr() {
        let p = MeasurementProblem::generate(80, 400, 6, 17).unwrap();
        let index = build_index(&p.a, 9, 20, 4).unwrap();
        let cfg = AlgorithmConfig::ompr(6);
        let (hashed, trace) = run_ompr_hash(&p.a, &p.b, &cfg, &index, Fallback::Exact).unwrap();
        let (exact, _) = run_omprl(&p.a, &p.b, &cfg).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(hashed.support, exact.support);
        assert!(trace.iterations.iter().all(|rec| rec.query.is_some()));
    }

    #[test]
    fn skip_with_tiny_index_may_stall_but_never_increases() {
        let p = MeasurementProblem::generate(40, 200, 5, 3).unwrap();
        let index = build_index(&p.a, 16, 1, 2).unwrap();
        let cfg = AlgorithmConfig::ompr(5).with_init(Init::Random).with_seed(8);
        let (_, trace) = run_ompr_hash(&p.a, &p.b, &cfg, &index, Fallback::Skip).unwrap();
        let obj: Vec<f64> = trace.objectives().collect();
        for w in obj.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn rejects_l_above_one_and_foreign_index() {
        let p = MeasurementProblem::generate(20, 40, 3, 1).unwrap();
        let index = build_index(&p.a, 4, 2, 0).unwrap();
        assert!(run_ompr_hash(&p.a, &p.b, &AlgorithmConfig::ompr_l(3, 2), &index, Fallback::Exact).is_err());
        let other = MeasurementProblem::generate(20, 41, 3, 1).unwrap();
        assert!(run_ompr_hash(&other.a, &other.b, &AlgorithmConfig::ompr(3), &index, Fallback::Exact).is_err());
    }

    #[test]
    fn fallback_parses() {
        assert_eq!("exact".parse::<Fallback>().unwrap(), Fallback::Exact);
        assert_eq!("skip".parse::<Fallback>().unwrap(), Fallback::Skip);
        assert!("other".parse::<Fallback>().is_err());
    }
}
