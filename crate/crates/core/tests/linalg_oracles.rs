use ompr_core::ensemble::gaussian_matrix;
use ompr_core::error::Error;
use ompr_core::linalg::{
    least_squares_on_support, max_abs, residual_correlation, rip_constant_exhaustive, DenseMatrix, RipMethod,
    SupportSet,
};
use ompr_core::rng::Stream;
use proptest::prelude::*;
use rand::Rng as _;

fn naive_column(a: &DenseMatrix, j: usize) -> Vec<f64> {
    (0..a.rows()).map(|i| a.get(i, j)).collect()
}

#[test]
fn two_column_solve_matches_hand_elimination() {
    let a = gaussian_matrix(6, 8, 7).unwrap();
    let mut xs = [0.0; 8];
    xs[1] = 1.5;
    xs[4] = -0.75;
    let b: Vec<f64> = (0..6).map(|i| a.get(i, 1) * xs[1] + a.get(i, 4) * xs[4]).collect();

    // 2x2 normal equations by Gaussian elimination
    let (c1, c4) = (naive_column(&a, 1), naive_column(&a, 4));
    let ip = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (g11, g12, g22) = (ip(&c1, &c1), ip(&c1, &c4), ip(&c4, &c4));
    let (r1, r2) = (ip(&c1, &b), ip(&c4, &b));
    let factor = g12 / g11;
    let x4 = (r2 - factor * r1) / (g22 - factor * g12);
    let x1 = (r1 - g12 * x4) / g11;

    let x = least_squares_on_support(&a, &b, &SupportSet::new(vec![1, 4]).unwrap()).unwrap();
    assert!((x[1] - x1).abs() < 1e-8 && (x[4] - x4).abs() < 1e-8);
    assert!((x[1] - 1.5).abs() < 1e-8 && (x[4] + 0.75).abs() < 1e-8);
    for j in [0, 2, 3, 5, 6, 7] {
        assert_eq!(x[j], 0.0);
    }
}

#[test]
fn least_squares_small_cases() {
    let x = least_squares_on_support(
        &DenseMatrix::identity(3),
        &[1.0, 2.0, 3.0],
        &SupportSet::new(vec![0, 2]).unwrap(),
    )
    .unwrap();
    assert_eq!(x, vec![1.0, 0.0, 3.0]);
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let x = least_squares_on_support(&a, &[2.0, 2.0], &SupportSet::new(vec![1]).unwrap()).unwrap();
    assert_eq!(x, vec![0.0, 1.0]);
}

#[test]
fn duplicate_columns_are_rank_deficient() {
    let a = DenseMatrix::from_rows(&[vec![0.6, 0.6, 0.0], vec![0.8, 0.8, 1.0]]).unwrap();
    let err = least_squares_on_support(&a, &[1.0, 1.0], &SupportSet::new(vec![0, 1]).unwrap()).unwrap_err();
    assert!(matches!(err, Error::RankDeficient { .. }));
}

#[test]
fn residual_correlation_matches_double_loop() {
    let a = gaussian_matrix(4, 5, 3).unwrap();
    let mut x = vec![0.0; 5];
    x[0] = 1.0;
    let b: Vec<f64> = naive_column(&a, 1);
    let got = residual_correlation(&a, &x, &b).unwrap();
    for j in 0..5 {
        let mut expect = 0.0;
        for i in 0..4 {
            let mut ax = 0.0;
            for c in 0..5 {
                ax += a.get(i, c) * x[c];
            }
            expect += a.get(i, j) * (b[i] - ax);
        }
        assert!((got[j] - expect).abs() < 1e-14, "column {j}: {} vs {expect}", got[j]);
    }
}

#[test]
fn residual_correlation_small_cases() {
    let got = residual_correlation(&DenseMatrix::identity(2), &[0.0, 0.0], &[1.0, -2.0]).unwrap();
    assert_eq!(got, vec![1.0, -2.0]);
    let a = gaussian_matrix(5, 3, 1).unwrap();
    let x = [0.3, -1.0, 2.0];
    let b = a.mul_vec(&x).unwrap();
    assert!(max_abs(&residual_correlation(&a, &x, &b).unwrap()) < 1e-14);
    assert!(matches!(
        residual_correlation(&a, &x, &[0.0; 4]),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn pairwise_constant_matches_closed_form() {
    let a = gaussian_matrix(6, 8, 11).unwrap();
    let mut pairs = 0;
    let mut oracle: f64 = 0.0;
    for i in 0..8 {
        for j in i + 1..8 {
            pairs += 1;
            let (ci, cj) = (naive_column(&a, i), naive_column(&a, j));
            let g = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
            let (p, r, q) = (g(&ci, &ci), g(&ci, &cj), g(&cj, &cj));
            // eigenvalues of [[p, r], [r, q]]
            let mean = 0.5 * (p + q);
            let radius = (0.25 * (p - q).powi(2) + r * r).sqrt();
            oracle = oracle.max((mean + radius - 1.0).max(1.0 - (mean - radius)));
        }
    }
    assert_eq!(pairs, 28);
    let est = rip_constant_exhaustive(&a, 2).unwrap();
    assert_eq!(est.method, RipMethod::Exhaustive);
    assert!((est.delta - oracle.clamp(0.0, 1.0)).abs() < 1e-8 * (1.0 + oracle));
}

#[test]
fn rip_trivial_cases() {
    let q = DenseMatrix::identity(5);
    for order in 1..=5 {
        assert!(rip_constant_exhaustive(&q, order).unwrap().delta < 1e-12);
    }
    let mut a = gaussian_matrix(5, 6, 2).unwrap();
    let col = a.column(0).to_vec();
    a.column_mut(3).copy_from_slice(&col);
    assert!((rip_constant_exhaustive(&a, 2).unwrap().delta - 1.0).abs() < 1e-12);
    let big = gaussian_matrix(3, 40, 1).unwrap();
    assert!(matches!(rip_constant_exhaustive(&big, 20), Err(Error::TooLarge { .. })));
}

#[test]
fn rip_is_monotone_and_bounds_sparse_vectors() {
    let a = gaussian_matrix(40, 12, 9).unwrap();
    let deltas: Vec<f64> = (1..=5).map(|o| rip_constant_exhaustive(&a, o).unwrap().delta).collect();
    // the norm bounds only follow from an unclamped constant
    assert!(deltas[4] < 1.0);
    for w in deltas.windows(2) {
        assert!(w[0] <= w[1] + 1e-12);
    }
    let mut rng = Stream::Custom(1).rng(4);
    for (order, delta) in (1..=5).zip(&deltas) {
        for _ in 0..100 {
            let support = rand::seq::index::sample(&mut rng, 12, order).into_vec();
            let mut x = vec![0.0; 12];
            for &j in &support {
                x[j] = rng.random::<f64>() - 0.5;
            }
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ax: f64 = a.mul_vec(&x).unwrap().iter().map(|v| v * v).sum();
            assert!(ax >= (1.0 - delta) * nx - 1e-12 && ax <= (1.0 + delta) * nx + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_squares_is_an_orthogonal_projection(seed in 0u64..10_000, size in 1usize..6) {
        let a = gaussian_matrix(12, 16, seed).unwrap();
        let mut rng = Stream::Custom(2).rng(seed);
        let b: Vec<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
        let support = SupportSet::from_unsorted(rand::seq::index::sample(&mut rng, 16, size).into_vec());
        let x = least_squares_on_support(&a, &b, &support).unwrap();
        let again = least_squares_on_support(&a, &b, &support).unwrap();
        for (u, v) in x.iter().zip(&again) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
        let corr = residual_correlation(&a, &x, &b).unwrap();
        let scale = max_abs(&a.tr_mul_vec(&b).unwrap());
        for &j in support.iter() {
            prop_assert!(corr[j].abs() <= 1e-8 * scale.max(1e-300));
        }
        for j in 0..16 {
            if !support.contains(j) {
                prop_assert_eq!(x[j], 0.0);
            }
        }
    }
}
