//! Dense kernels shared by every recovery algorithm.
//!
//! Matrices are stored column-major: column `j` of an `m × n` matrix lives in
//! `data[j * m..(j + 1) * m]`. Support-restricted solves and LSH indexing both
//! walk whole columns, so this keeps the hot paths contiguous.

mod eigen;
mod lstsq;
mod rip;
mod support;

pub use eigen::symmetric_eigenvalues;
pub use lstsq::{least_squares_on_support, solve_on_support, LSQ_RANK_TOLERANCE};
pub use rip::{binomial, rip_constant_exhaustive, rip_constant_sampled, RipEstimate, RipMethod, RIP_ENUMERATION_LIMIT};
pub use support::SupportSet;

use crate::error::{mismatch, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps column-major storage, rejecting wrong lengths and non-finite entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(mismatch(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(mismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadArguments(format!(
                "non-finite entry at ({}, {})",
                pos % rows,
                pos / rows
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(mismatch("ragged rows"));
        }
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::from_col_major(m, n, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for j in 0..n {
            out.data[j * n + j] = 1.0;
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.rows + i] = value;
    }

    /// `A x` for a dense `x` of length `n`. Zero entries of `x` are skipped.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(mismatch(format!(
                "A is {}x{}, x has length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut out);
            }
        }
        Ok(out)
    }

    /// `A_S x_S` where `x` is a full-length vector and only `support` is read.
    pub fn mul_on_support(&self, x: &[f64], support: &SupportSet) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &j in support.iter() {
            if x[j] != 0.0 {
                axpy(x[j], self.column(j), &mut out);
            }
        }
        out
    }

    /// `A^T r`.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.rows {
            return Err(mismatch(format!(
                "A is {}x{}, vector has length {}",
                self.rows,
                self.cols,
                r.len()
            )));
        }
        Ok((0..self.cols).map(|j| dot(self.column(j), r)).collect())
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm(self.column(j))).collect()
    }

    /// Transposed copy; only used by tests and small-matrix constructions.
    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }
}

/// Unrolled dot product. Summation order is fixed so results are bitwise
/// reproducible for a given input.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `b - A x`, reading `x` only on `support`.
pub fn residual_on_support(a: &DenseMatrix, x: &[f64], b: &[f64], support: &SupportSet) -> Vec<f64> {
    let ax = a.mul_on_support(x, support);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// `A^T (b - A x)`: the negative gradient of `½‖Ax − b‖²`.
pub fn residual_correlation(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("A has {} rows, b has length {}", a.rows(), b.len())));
    }
    let ax = a.mul_vec(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    a.tr_mul_vec(&r)
}

/// `½‖Ax − b‖²`.
pub fn objective(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(mismatch("b length differs from row count"));
    }
    let ax = a.mul_vec(x)?;
    Ok(0.5 * ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
}
