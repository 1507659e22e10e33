/// Eigenvalues of a symmetric `p × p` matrix (row-major, overwritten) by
/// cyclic Jacobi rotations, returned in ascending order.
///
/// Sweeps stop once the off-diagonal mass is below `1e-30` of the total
/// squared Frobenius norm, which puts every eigenvalue within roughly
/// `1e-15 · ‖M‖` of its exact value.
pub fn symmetric_eigenvalues(mat: &mut [f64], p: usize) -> Vec<f64> {
    assert_eq!(mat.len(), p * p, "matrix must be p x p");
    let total: f64 = mat.iter().map(|v| v * v).sum();
    if p <= 1 || total == 0.0 {
        let mut diag: Vec<f64> = (0..p).map(|i| mat[i * p + i]).collect();
        diag.sort_by(f64::total_cmp);
        return diag;
    }
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    s += m[i * p + j] * m[i * p + j];
                }
            }
        }
        s
    };
    for _sweep in 0..64 {
        if off(mat) <= 1e-30 * total {
            break;
        }
        for i in 0..p - 1 {
            for j in i + 1..p {
                let aij = mat[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let aii = mat[i * p + i];
                let ajj = mat[j * p + j];
                let theta = (ajj - aii) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..p {
                    let mri = mat[r * p + i];
                    let mrj = mat[r * p + j];
                    mat[r * p + i] = c * mri - s * mrj;
                    mat[r * p + j] = s * mri + c * mrj;
                }
                for r in 0..p {
                    let mir = mat[i * p + r];
                    let mjr = mat[j * p + r];
                    mat[i * p + r] = c * mir - s * mjr;
                    mat[j * p + r] = s * mir + c * mjr;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..p).map(|i| mat[i * p + i]).collect();
    diag.sort_by(f64::total_cmp);
    diag
}
