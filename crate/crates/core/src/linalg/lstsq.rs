//! Least squares restricted to a column support.
//!
//! The fast path solves the normal equations `A_I^T A_I x = A_I^T b` with a
//! Cholesky factorization. When a pivot is small relative to the diagonal the
//! factorization cannot be trusted, so the conditioning of `A_I` itself is
//! measured with a column-pivoted Householder QR. A genuinely rank-deficient
//! support is rejected; otherwise the normal equations are re-solved with
//! conjugate gradients.

use super::{axpy, dot, DenseMatrix, SupportSet};
use crate::error::{mismatch, Error, Result};

/// Supports whose smallest-to-largest singular value ratio falls at or below
/// this value are rejected as rank deficient.
pub const LSQ_RANK_TOLERANCE: f64 = 1e-10;

/// Cholesky pivots below this fraction of the largest Gram diagonal trigger the
/// QR conditioning check. Roughly a singular-value ratio of 1e-6.
const PIVOT_GUARD: f64 = 1e-12;

const CG_TOLERANCE: f64 = 1e-10;

/// Solves `min ‖A_I u − b‖` and scatters `u` into a length-`n` vector.
pub fn least_squares_on_support(a: &DenseMatrix, b: &[f64], support: &SupportSet) -> Result<Vec<f64>> {
    let coeffs = solve_on_support(a, b, support)?;
    let mut x = vec![0.0; a.cols()];
    for (&j, c) in support.iter().zip(coeffs) {
        x[j] = c;
    }
    Ok(x)
}

/// Coefficients on `support`, in the support's ascending index order.
pub fn solve_on_support(a: &DenseMatrix, b: &[f64], support: &SupportSet) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(mismatch(format!("A has {m} rows, b has length {}", b.len())));
    }
    if support.bound() > n {
        return Err(mismatch(format!(
            "support index {} out of range for {n} columns",
            support.bound() - 1
        )));
    }
    let p = support.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    if p > m {
        return Err(Error::RankDeficient { size: p, ratio: 0.0 });
    }
    let cols: Vec<&[f64]> = support.iter().map(|&j| a.column(j)).collect();

    let mut gram = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let g = dot(cols[i], cols[j]);
            gram[i * p + j] = g;
            gram[j * p + i] = g;
        }
    }
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, b)).collect();

    match cholesky(&gram, p) {
        Ok(l) => Ok(cholesky_solve(&l, p, &rhs)),
        Err(_) => {
            let ratio = qr_conditioning(&cols, m);
            if ratio <= LSQ_RANK_TOLERANCE {
                return Err(Error::RankDeficient { size: p, ratio });
            }
            Ok(conjugate_gradient(&gram, p, &rhs, 10 * p))
        }
    }
}

/// Lower-triangular factor of a symmetric positive-definite matrix, or an
/// error when some pivot drops below the guard.
fn cholesky(gram: &[f64], p: usize) -> std::result::Result<Vec<f64>, ()> {
    let max_diag = (0..p).map(|i| gram[i * p + i]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return Err(());
    }
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = gram[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > PIVOT_GUARD * max_diag) {
            return Err(());
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = gram[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], p: usize, rhs: &[f64]) -> Vec<f64> {
    let mut y = rhs.to_vec();
    for i in 0..p {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    y
}

/// Ratio `min |R_ii| / max |R_ii|` from a column-pivoted Householder QR of the
/// `m × p` matrix whose columns are given.
fn qr_conditioning(cols: &[&[f64]], m: usize) -> f64 {
    let p = cols.len();
    let mut work: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
    let mut diag = Vec::with_capacity(p);
    for step in 0..p.min(m) {
        // Pivot: the remaining column with the largest trailing norm.
        let (best, _) = (step..p)
            .map(|c| (c, work[c][step..].iter().map(|v| v * v).sum::<f64>()))
            .fold((step, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        work.swap(step, best);

        let col = &work[step];
        let alpha = col[step..].iter().map(|v| v * v).sum::<f64>().sqrt();
        diag.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = col[step..].to_vec();
        v[0] += if col[step] >= 0.0 { alpha } else { -alpha };
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        for c in work.iter_mut().skip(step + 1) {
            let proj = 2.0 * dot(&v, &c[step..]) / vnorm_sq;
            axpy(-proj, &v, &mut c[step..]);
        }
    }
    let max = diag.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    min / max
}

fn conjugate_gradient(gram: &[f64], p: usize, rhs: &[f64], max_iters: usize) -> Vec<f64> {
    let matvec = |v: &[f64]| -> Vec<f64> { (0..p).map(|i| dot(&gram[i * p..(i + 1) * p], v)).collect() };
    let rhs_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; p];
    if rhs_norm == 0.0 {
        return x;
    }
    let mut r = rhs.to_vec();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iters {
        if rr.sqrt() <= CG_TOLERANCE * rhs_norm {
            break;
        }
        let gd = matvec(&d);
        let denom = dot(&d, &gd);
        if denom <= 0.0 {
            break;
        }
        let alpha = rr / denom;
        axpy(alpha, &d, &mut x);
        axpy(-alpha, &gd, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = ri + beta * *di;
        }
        rr = rr_next;
    }
    x
}
