use nalgebra::{DMatrix, DVector};
use ompr_core::algorithms::{initialize_support, run_omp, run_omprl, run_two_stage, AlgorithmConfig, Init, Status};
use ompr_core::diagnostics::RipContext;
use ompr_core::ensemble::MeasurementProblem;
use ompr_core::linalg::{max_abs, residual_correlation, rip_constant_exhaustive, DenseMatrix};
use ompr_core::rng::trial_seed;

fn to_nalgebra(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.rows(), a.cols(), a.as_slice())
}

/// Indices of the `k` largest `|v_j|` by full sort, lower index first on ties.
fn top_k(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut out = idx[..k].to_vec();
    out.sort_unstable();
    out
}

fn ls_on(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(support);
    let coef = sub.clone().svd(true, true).solve(b, 1e-14).unwrap();
    let mut x = DVector::zeros(a.ncols());
    for (c, &j) in coef.iter().zip(support) {
        x[j] = *c;
    }
    x
}

/// Hard thresholding pursuit written directly against nalgebra.
fn htp_reference(a: &DMatrix<f64>, b: &DVector<f64>, k: usize, eta: f64, steps: usize) -> Vec<Vec<usize>> {
    let mut support = top_k(&(a.transpose() * b), k);
    let mut x = ls_on(a, b, &support);
    let mut out = Vec::new();
    for _ in 0..steps {
        let z = &x + eta * a.transpose() * (b - a * &x);
        support = top_k(&z, k);
        x = ls_on(a, b, &support);
        out.push(support.clone());
    }
    out
}

#[test]
fn ompr_one_is_ompr() {
    for t in 0..20 {
        let p = MeasurementProblem::generate(30, 90, 6, trial_seed(21, 0, t)).unwrap();
        let cfg = AlgorithmConfig::ompr(6).with_init(Init::Random).with_seed(t);
        let explicit = AlgorithmConfig::ompr_l(6, 1).with_init(Init::Random).with_seed(t);
        assert_eq!(
            run_omprl(&p.a, &p.b, &cfg).unwrap(),
            run_omprl(&p.a, &p.b, &explicit).unwrap()
        );
    }
}

#[test]
fn ompr_k_matches_independent_htp() {
    for t in 0..20 {
        let p = MeasurementProblem::generate(40, 100, 6, trial_seed(22, 0, t)).unwrap();
        let (_, trace) = run_omprl(&p.a, &p.b, &AlgorithmConfig::iht_newton(6)).unwrap();
        let reference = htp_reference(
            &to_nalgebra(&p.a),
            &DVector::from_column_slice(&p.b),
            6,
            1.0,
            trace.iterations.len(),
        );
        for (rec, expect) in trace.iterations.iter().zip(&reference) {
            assert_eq!(
                rec.support.as_slice(),
                expect.as_slice(),
                "trial {t} iteration {}",
                rec.iteration
            );
        }
    }
}

#[test]
fn iterates_are_least_squares_on_their_support() {
    let p = MeasurementProblem::generate_noisy(50, 150, 8, 0.05, 4).unwrap();
    let cfg = AlgorithmConfig::ompr_l(8, 3).with_init(Init::Random).with_seed(1);
    let (_, trace) = run_omprl(&p.a, &p.b, &cfg).unwrap();
    let scale = max_abs(&p.a.tr_mul_vec(&p.b).unwrap());
    for rec in &trace.iterations {
        let x = ompr_core::linalg::least_squares_on_support(&p.a, &p.b, &rec.support).unwrap();
        let g = residual_correlation(&p.a, &x, &p.b).unwrap();
        for &j in rec.support.iter() {
            assert!(g[j].abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn monotone_when_step_is_admissible() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 30 {
        seed += 1;
        let p = MeasurementProblem::generate(9, 12, 3, trial_seed(31, 0, seed)).unwrap();
        let l = 1 + (seed as usize % 3);
        let delta = rip_constant_exhaustive(&p.a, 2 * l).unwrap().delta;
        let eta = 0.95 / (1.0 + delta);
        if eta * (1.0 + delta) >= 1.0 {
            continue;
        }
        let cfg = AlgorithmConfig::ompr_l(3, l)
            .with_eta(eta)
            .with_init(Init::Random)
            .with_seed(seed);
        let (_, trace) = match run_omprl(&p.a, &p.b, &cfg) {
            Ok(r) => r,
            Err(ompr_core::Error::RankDeficient { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let obj: Vec<f64> = trace.objectives().collect();
        for w in obj.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: {} -> {}", w[0], w[1]);
        }
        checked += 1;
    }
}

fn success_count(runs: impl Iterator<Item = Option<f64>>) -> usize {
    runs.filter(|e| e.is_some_and(|e| e <= 1e-4)).count()
}

#[test]
fn ompr_recovers_at_low_sparsity_and_beats_omp() {
    let problems: Vec<_> = (0..100)
        .map(|t| MeasurementProblem::generate(100, 400, 10, trial_seed(1, 0, t)).unwrap())
        .collect();
    let ompr = success_count(problems.iter().map(|p| {
        run_omprl(&p.a, &p.b, &AlgorithmConfig::ompr(10))
            .ok()
            .and_then(|(s, _)| p.relative_error(&s.x))
    }));
    let omp = success_count(problems.iter().map(|p| {
        run_omp(&p.a, &p.b, &AlgorithmConfig::omp(10))
            .ok()
            .and_then(|(s, _)| p.relative_error(&s.x))
    }));
    assert!(ompr >= 95, "OMPR recovered {ompr}/100");
    assert!(omp < ompr, "OMP {omp} vs OMPR {ompr}");
}

#[test]
fn subspace_pursuit_recovers_small_problems() {
    let hits = success_count((0..100).map(|t| {
        let p = MeasurementProblem::generate(40, 80, 4, trial_seed(2, 0, t)).unwrap();
        run_two_stage(&p.a, &p.b, &AlgorithmConfig::subspace_pursuit(4))
            .ok()
            .and_then(|(s, _)| p.relative_error(&s.x))
    }));
    assert!(hits >= 90, "subspace pursuit recovered {hits}/100");
}

#[test]
fn correlation_init_starts_lower_than_random() {
    let (mut topk, mut random) = (0.0, 0.0);
    for t in 0..50 {
        let p = MeasurementProblem::generate(100, 400, 10, trial_seed(3, 0, t)).unwrap();
        topk += initialize_support(&p.a, &p.b, 10, &Init::TopkCorrelation, t)
            .unwrap()
            .objective;
        random += initialize_support(&p.a, &p.b, 10, &Init::Random, t).unwrap().objective;
    }
    assert!(topk <= random, "{topk} vs {random}");
}

#[test]
fn true_support_is_a_fixed_point_for_every_family() {
    let p = MeasurementProblem::generate(30, 70, 5, 8).unwrap();
    let truth = p.truth.clone().unwrap();
    for cfg in [
        AlgorithmConfig::ompr(5),
        AlgorithmConfig::iht_newton(5),
        AlgorithmConfig::cosamp(5),
    ] {
        let cfg = cfg.with_init(Init::Given(truth.support.clone()));
        let (state, trace) = match cfg.family {
            ompr_core::Family::TwoStage => run_two_stage(&p.a, &p.b, &cfg).unwrap(),
            _ => run_omprl(&p.a, &p.b, &cfg).unwrap(),
        };
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(state.support, truth.support);
        assert!(state.objective <= 1e-20);
    }
    let (state, _) = run_omp(&p.a, &p.b, &AlgorithmConfig::omp(5)).unwrap();
    assert!(state.objective <= 1e-10 || state.support != truth.support);
}

#[test]
fn status_agrees_with_final_objective() {
    for t in 0..20 {
        let p = MeasurementProblem::generate_noisy(30, 90, 5, 0.2, trial_seed(4, 0, t)).unwrap();
        let cfg = AlgorithmConfig::ompr_l(5, 2).with_max_iters(7);
        let (state, trace) = run_omprl(&p.a, &p.b, &cfg).unwrap();
        match trace.status {
            Status::Converged => assert!(state.objective <= cfg.tol),
            Status::MaxIters => assert_eq!(trace.iterations.len(), 7),
            Status::Stalled => {
                let n = trace.iterations.len();
                let prev = if n >= 2 {
                    &trace.iterations[n - 2].support
                } else {
                    &trace.initial_support
                };
                assert_eq!(&trace.iterations[n - 1].support, prev);
            }
        }
        assert_eq!(
            trace.iterations.last().map_or(trace.initial_objective, |r| r.objective),
            state.objective
        );
    }
}

#[test]
fn rip_context_orders() {
    let p = MeasurementProblem::generate(8, 10, 2, 1).unwrap();
    let rip = RipContext::exhaustive(&p.a, 2, 1).unwrap();
    assert_eq!(rip.delta_2k.unwrap().order, 4);
    assert_eq!(rip.delta_2l.unwrap().order, 2);
    assert_eq!(rip.delta_2kl.unwrap().order, 5);
}
