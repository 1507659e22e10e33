use ompr_core::algorithms::{run_omprl, AlgorithmConfig};
use ompr_core::ensemble::{gaussian_matrix, MeasurementProblem};
use ompr_core::format::{read_index, write_index};
use ompr_core::linalg::{DenseMatrix, SupportSet};
use ompr_core::lsh::{build_index, query_max_abs_correlation, run_ompr_hash, Fallback};

/// Unit vectors at angle `theta` in the first two coordinates of `R^m`.
fn pair_at_angle(m: usize, theta: f64) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(m, 2);
    a.set(0, 0, 1.0);
    a.set(0, 1, theta.cos());
    a.set(1, 1, theta.sin());
    a
}

#[test]
fn single_bit_collisions_follow_the_angle_law() {
    for degrees in [30.0f64, 60.0, 90.0] {
        let theta = degrees.to_radians();
        let a = pair_at_angle(3, theta);
        // one bit per table, so each table is an independent hyperplane draw
        let index = build_index(&a, 1, 20_000, 7).unwrap();
        let collisions = index.tables().iter().filter(|t| t.bucket_count() == 1).count();
        let trials = index.table_count() as f64;
        let p = 1.0 - theta / std::f64::consts::PI;
        let se = (p * (1.0 - p) / trials).sqrt();
        let freq = collisions as f64 / trials;
        assert!((freq - p).abs() <= 3.0 * se, "theta = {degrees}: {freq} vs {p}");
    }
}

#[test]
fn hashed_ompr_matches_exact_on_small_problems() {
    for seed in 0..5 {
        let p = MeasurementProblem::generate(60, 1000, 3, seed).unwrap();
        let index = build_index(&p.a, 10, 32, seed).unwrap();
        let cfg = AlgorithmConfig::ompr(3);
        let (hashed, _) = run_ompr_hash(&p.a, &p.b, &cfg, &index, Fallback::Exact).unwrap();
        let (exact, _) = run_omprl(&p.a, &p.b, &cfg).unwrap();
        let rel = |x: &[f64]| p.relative_error(x).unwrap();
        assert!((rel(&hashed.x) - rel(&exact.x)).abs() <= 1e-6);
    }
}

#[test]
fn query_reports_are_consistent() {
    let a = gaussian_matrix(20, 300, 5).unwrap();
    let index = build_index(&a, 6, 12, 1).unwrap();
    let r: Vec<f64> = a.column(17).iter().map(|v| -v).collect();
    let (hit, report) = query_max_abs_correlation(&index, &a, &r, &SupportSet::empty());
    assert_eq!(hit, Some(17));
    assert!((report.similarity - 1.0).abs() < 1e-12);
    let (hit, _) = query_max_abs_correlation(&index, &a, &r, &SupportSet::new(vec![17]).unwrap());
    assert_ne!(hit, Some(17));
}

#[test]
fn serialized_index_answers_identically() {
    let p = MeasurementProblem::generate(30, 200, 4, 3).unwrap();
    let index = build_index(&p.a, 7, 9, 2).unwrap();
    let mut buf = Vec::new();
    write_index(&mut buf, &index).unwrap();
    let back = read_index(&mut buf.as_slice()).unwrap();
    let cfg = AlgorithmConfig::ompr(4);
    assert_eq!(
        run_ompr_hash(&p.a, &p.b, &cfg, &index, Fallback::Skip).unwrap(),
        run_ompr_hash(&p.a, &p.b, &cfg, &back, Fallback::Skip).unwrap()
    );
}
