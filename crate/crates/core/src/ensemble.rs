//! Random problem instances: column-normalized Gaussian matrices, ±1 sparse
//! signals, and measurement noise scaled to a fixed signal-to-noise ratio.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{bad_args, mismatch, Error, Result};
use crate::linalg::{norm, DenseMatrix, SupportSet};
use crate::rng::Stream;

/// Tolerance for the `b = A x* + e` and unit-column invariants.
pub const PROBLEM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub x: Vec<f64>,
    pub support: SupportSet,
}

/// One recovery instance `b = A x* + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementProblem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub truth: Option<GroundTruth>,
    pub noise: Option<Vec<f64>>,
    pub seed: u64,
}

impl MeasurementProblem {
    /// Assembles a problem and checks its invariants.
    pub fn new(
        a: DenseMatrix,
        b: Vec<f64>,
        truth: Option<GroundTruth>,
        noise: Option<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let problem = Self {
            a,
            b,
            truth,
            noise,
            seed,
        };
        problem.verify()?;
        Ok(problem)
    }

    /// Gaussian matrix and ±1 signal drawn from independent streams of `seed`,
    /// with noiseless measurements.
    pub fn generate(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        let a = gaussian_matrix(m, n, seed)?;
        let (x, support) = sparse_signal(n, k, seed)?;
        let b = a.mul_vec(&x)?;
        Self::new(a, b, Some(GroundTruth { x, support }), None, seed)
    }

    /// `generate` followed by `add_noise(level)` on the same seed.
    pub fn generate_noisy(m: usize, n: usize, k: usize, level: f64, seed: u64) -> Result<Self> {
        let clean = Self::generate(m, n, k, seed)?;
        if level == 0.0 {
            return Ok(clean);
        }
        add_noise(&clean, level, seed)
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// True when there is no noise or the recorded noise is identically zero.
    pub fn is_noiseless(&self) -> bool {
        self.noise.as_ref().is_none_or(|e| e.iter().all(|v| *v == 0.0))
    }

    /// `‖x − x*‖ / ‖x*‖`, or `‖x‖` when `x* = 0`.
    pub fn relative_error(&self, x: &[f64]) -> Option<f64> {
        let truth = self.truth.as_ref()?;
        let diff: Vec<f64> = x.iter().zip(&truth.x).map(|(a, b)| a - b).collect();
        let denom = norm(&truth.x);
        Some(if denom == 0.0 { norm(&diff) } else { norm(&diff) / denom })
    }

    pub fn verify(&self) -> Result<()> {
        let (m, n) = (self.a.rows(), self.a.cols());
        if self.b.len() != m {
            return Err(mismatch(format!("b has length {}, expected {m}", self.b.len())));
        }
        for (j, c) in self.a.column_norms().iter().enumerate() {
            if (c - 1.0).abs() > PROBLEM_TOLERANCE {
                return Err(bad_args(format!("column {j} has norm {c}, expected 1")));
            }
        }
        if let Some(e) = &self.noise {
            if e.len() != m {
                return Err(mismatch(format!("noise has length {}, expected {m}", e.len())));
            }
        }
        if let Some(truth) = &self.truth {
            if truth.x.len() != n {
                return Err(mismatch(format!("x* has length {}, expected {n}", truth.x.len())));
            }
            if truth.support.bound() > n {
                return Err(mismatch("truth support out of range"));
            }
            let off_support = truth
                .x
                .iter()
                .enumerate()
                .any(|(j, v)| *v != 0.0 && !truth.support.contains(j));
            if off_support {
                return Err(bad_args("x* is nonzero outside its recorded support"));
            }
            let mut expected = self.a.mul_vec(&truth.x)?;
            if let Some(e) = &self.noise {
                for (bi, ei) in expected.iter_mut().zip(e) {
                    *bi += ei;
                }
            }
            let scale = 1.0 + self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let worst = expected
                .iter()
                .zip(&self.b)
                .fold(0.0f64, |acc, (p, q)| acc.max((p - q).abs()));
            if worst > PROBLEM_TOLERANCE * scale {
                return Err(bad_args(format!("b deviates from A x* + e by {worst:.3e}")));
            }
        }
        Ok(())
    }
}

/// `m × n` matrix of standard normal draws with every column scaled to unit norm.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(bad_args(format!("matrix dimensions must be positive, got {m}x{n}")));
    }
    let mut rng = Stream::Matrix.rng(seed);
    let mut a = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut attempts = 0;
        loop {
            let col = a.column_mut(j);
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let c = norm(col);
            if c > 0.0 {
                col.iter_mut().for_each(|v| *v /= c);
                break;
            }
            attempts += 1;
            if attempts > 1 {
                return Err(Error::DegenerateColumn(j));
            }
        }
    }
    Ok(a)
}

/// Uniformly random `k`-subset of `0..n` carrying independent ±1 entries.
pub fn sparse_signal(n: usize, k: usize, seed: u64) -> Result<(Vec<f64>, SupportSet)> {
    if k > n {
        return Err(bad_args(format!("sparsity {k} exceeds dimension {n}")));
    }
    let mut support_rng = Stream::Support.rng(seed);
    let mut sign_rng = Stream::Signs.rng(seed);
    let support = SupportSet::from_unsorted(index::sample(&mut support_rng, n, k).into_vec());
    let mut x = vec![0.0; n];
    for &j in &support {
        x[j] = if sign_rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    Ok((x, support))
}

/// Replaces `b` by `A x* + e` with Gaussian `e` rescaled to `‖e‖ = level · ‖A x*‖`.
pub fn add_noise(problem: &MeasurementProblem, level: f64, seed: u64) -> Result<MeasurementProblem> {
    let truth = problem
        .truth
        .as_ref()
        .ok_or_else(|| bad_args("add_noise needs a ground-truth signal"))?;
    if !(level >= 0.0) || !level.is_finite() {
        return Err(bad_args(format!("noise level must be finite and >= 0, got {level}")));
    }
    let m = problem.rows();
    let clean = problem.a.mul_vec(&truth.x)?;
    let mut out = problem.clone();
    if level == 0.0 {
        out.b = clean;
        out.noise = Some(vec![0.0; m]);
        return Ok(out);
    }
    let mut rng = Stream::Noise.rng(seed);
    let mut e: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let target = level * norm(&clean);
    let current = norm(&e);
    if current > 0.0 && target > 0.0 {
        e.iter_mut().for_each(|v| *v *= target / current);
    } else {
        e.iter_mut().for_each(|v| *v = 0.0);
    }
    out.b = clean.iter().zip(&e).map(|(p, q)| p + q).collect();
    out.noise = Some(e);
    out.verify()?;
    Ok(out)
}
