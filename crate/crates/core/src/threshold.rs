//! Hard thresholding `H_k(z)` and partial hard thresholding `H_k(z; I, l)`.
//!
//! Selection is by decreasing magnitude; equal magnitudes are broken in favour
//! of the lower index, which makes every run bit-reproducible. Selection uses
//! `select_nth_unstable_by` (expected linear time), never a full sort.

use std::cmp::Ordering;

use crate::error::{bad_args, mismatch, Result};
use crate::linalg::SupportSet;

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdResult {
    /// Thresholded vector, zero outside `support`.
    pub y: Vec<f64>,
    /// Retained indices.
    pub support: SupportSet,
    /// `support \ I`.
    pub found: SupportSet,
    /// `I \ support`.
    pub lost: SupportSet,
}

/// Larger magnitude first, then lower index.
#[inline]
pub(crate) fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0))
}

/// Indices of the `count` highest-ranked entries, ascending.
pub(crate) fn select_top(mut entries: Vec<(usize, f64)>, count: usize) -> SupportSet {
    if count == 0 {
        return SupportSet::empty();
    }
    if count < entries.len() {
        entries.select_nth_unstable_by(count - 1, rank_order);
        entries.truncate(count);
    }
    SupportSet::from_unsorted(entries.into_iter().map(|(j, _)| j).collect())
}

/// Keeps the `k` largest-magnitude entries of `z`.
pub fn hard_threshold(z: &[f64], k: usize) -> Result<ThresholdResult> {
    if k > z.len() {
        return Err(bad_args(format!("k = {k} exceeds vector length {}", z.len())));
    }
    let support = select_top(z.iter().copied().enumerate().collect(), k);
    let y = restrict(z, &support);
    Ok(ThresholdResult {
        y,
        found: support.clone(),
        lost: SupportSet::empty(),
        support,
    })
}

/// Closest vector to `z` with at most `k` nonzeros of which at most `l` lie
/// outside `current`.
///
/// Computed by taking the `l` largest entries of `z` off `current`, joining
/// them to `current`, and hard thresholding `z` on that union to `k` entries.
pub fn partial_hard_threshold(z: &[f64], current: &SupportSet, l: usize, k: usize) -> Result<ThresholdResult> {
    if current.len() != k {
        return Err(bad_args(format!(
            "current support has {} elements, expected k = {k}",
            current.len()
        )));
    }
    if l == 0 || l > k {
        return Err(bad_args(format!("replacement size l = {l} must lie in 1..={k}")));
    }
    if current.bound() > z.len() {
        return Err(mismatch("support index beyond vector length"));
    }
    let outside: Vec<(usize, f64)> = z
        .iter()
        .copied()
        .enumerate()
        .filter(|(j, _)| !current.contains(*j))
        .collect();
    let top = select_top(outside, l);
    let joined = current.union(&top);
    let support = select_top(joined.iter().map(|&j| (j, z[j])).collect(), k);
    let y = restrict(z, &support);
    Ok(ThresholdResult {
        y,
        found: support.difference(current),
        lost: current.difference(&support),
        support,
    })
}

fn restrict(z: &[f64], support: &SupportSet) -> Vec<f64> {
    let mut y = vec![0.0; z.len()];
    for &j in support {
        y[j] = z[j];
    }
    y
}
