//! Restricted isometry constants by brute force.

use rand::seq::index;

use super::{dot, symmetric_eigenvalues, DenseMatrix};
use crate::error::{bad_args, Error, Result};
use crate::rng::Stream;

/// Maximum number of supports `rip_constant_exhaustive` will enumerate.
pub const RIP_ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RipMethod {
    /// Every support of the given order was visited.
    Exhaustive,
    /// Maximum over randomly sampled supports; never larger than the true constant.
    SampledLowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RipEstimate {
    pub order: usize,
    pub delta: f64,
    pub method: RipMethod,
}

impl RipEstimate {
    /// True only for exhaustive estimates, the ones that may gate an assertion.
    pub fn is_certified(&self) -> bool {
        self.method == RipMethod::Exhaustive
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Smallest `δ` with `(1−δ)‖x‖² ≤ ‖Ax‖² ≤ (1+δ)‖x‖²` over all `order`-sparse
/// `x`, found by visiting every support of size `order`.
pub fn rip_constant_exhaustive(a: &DenseMatrix, order: usize) -> Result<RipEstimate> {
    let n = a.cols();
    if order == 0 || order > n {
        return Err(bad_args(format!("RIP order {order} must lie in 1..={n}")));
    }
    let count = binomial(n, order);
    if count > RIP_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            order,
            count,
            limit: RIP_ENUMERATION_LIMIT,
        });
    }
    let gram = full_gram(a);
    let mut subset: Vec<usize> = (0..order).collect();
    let mut scratch = vec![0.0; order * order];
    let mut delta: f64 = 0.0;
    loop {
        delta = delta.max(support_deviation(&gram, n, &subset, &mut scratch));
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    Ok(RipEstimate {
        order,
        delta: delta.clamp(0.0, 1.0),
        method: RipMethod::Exhaustive,
    })
}

/// Lower bound on the RIP constant from `samples` uniformly drawn supports.
pub fn rip_constant_sampled(a: &DenseMatrix, order: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
    let n = a.cols();
    if order == 0 || order > n {
        return Err(bad_args(format!("RIP order {order} must lie in 1..={n}")));
    }
    let mut rng = Stream::Rip.rng(seed);
    let mut scratch = vec![0.0; order * order];
    let mut delta: f64 = 0.0;
    for _ in 0..samples {
        let mut subset = index::sample(&mut rng, n, order).into_vec();
        subset.sort_unstable();
        for i in 0..order {
            for j in 0..=i {
                let g = dot(a.column(subset[i]), a.column(subset[j]));
                scratch[i * order + j] = g;
                scratch[j * order + i] = g;
            }
        }
        delta = delta.max(extreme_deviation(&mut scratch, order));
    }
    Ok(RipEstimate {
        order,
        delta: delta.clamp(0.0, 1.0),
        method: RipMethod::SampledLowerBound,
    })
}

fn full_gram(a: &DenseMatrix) -> Vec<f64> {
    let n = a.cols();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(a.column(i), a.column(j));
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

fn support_deviation(gram: &[f64], n: usize, subset: &[usize], scratch: &mut [f64]) -> f64 {
    let p = subset.len();
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            scratch[r * p + c] = gram[i * n + j];
        }
    }
    extreme_deviation(scratch, p)
}

fn extreme_deviation(scratch: &mut [f64], p: usize) -> f64 {
    let ev = symmetric_eigenvalues(scratch, p);
    let (lo, hi) = (ev[0], ev[p - 1]);
    (hi - 1.0).max(1.0 - lo)
}

/// Advances `subset` to the next lexicographic `k`-combination of `0..n`.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(24, 6), 134_596);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(200, 100), u128::MAX);
    }

    #[test]
    fn combinations_are_enumerated_once() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut s, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(s, vec![3, 4]);
    }

    #[test]
    fn orthonormal_columns_have_zero_delta() {
        let a = DenseMatrix::identity(5);
        for order in 1..=5 {
            let est = rip_constant_exhaustive(&a, order).unwrap();
            assert!(est.delta < 1e-15);
            assert_eq!(est.method, RipMethod::Exhaustive);
        }
    }

    #[test]
    fn identical_columns_give_delta_one() {
        let s = 0.5f64.sqrt();
        let a = DenseMatrix::from_rows(&[vec![s, s, 1.0], vec![s, s, 0.0]]).unwrap();
        let est = rip_constant_exhaustive(&a, 2).unwrap();
        assert!((est.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_guard() {
        let a = DenseMatrix::zeros(2, 60);
        assert!(matches!(rip_constant_exhaustive(&a, 10), Err(Error::TooLarge { .. })));
        assert!(rip_constant_exhaustive(&a, 0).is_err());
    }

    #[test]
    fn sampled_is_a_lower_bound() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.6, 0.0, 0.3],
            vec![0.0, 0.8, 0.6, 0.1],
            vec![0.0, 0.0, 0.8, 0.949],
        ])
        .unwrap();
        let exact = rip_constant_exhaustive(&a, 2).unwrap();
        let sampled = rip_constant_sampled(&a, 2, 10, 3).unwrap();
        assert!(sampled.delta <= exact.delta + 1e-15);
        assert!(!sampled.is_certified());
    }
}
