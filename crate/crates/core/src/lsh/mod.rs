//! Sign-random-projection LSH over the columns of a measurement matrix.
//!
//! Each of the `q` tables hashes a vector to an `s`-bit key whose bit `i` is
//! `[u_i^T v ≥ 0]` for a Gaussian hyperplane `u_i` (so `sign(0) = +1`). Two
//! vectors at angle `θ` agree on a bit with probability `1 − θ/π`.
//!
//! Buckets are stored per table in compressed form: sorted distinct keys,
//! offsets into a member array, and the column indices of each bucket in
//! ascending order.

mod ompr_hash;

pub use ompr_hash::{run_ompr_hash, Fallback};

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{bad_args, Result};
use crate::linalg::{dot, norm, DenseMatrix, SupportSet};
use crate::rng::Stream;

/// Columns hashed per projection block during construction.
const BUILD_BLOCK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashTable {
    keys: Vec<u64>,
    offsets: Vec<u32>,
    members: Vec<u32>,
}

impl HashTable {
    /// Groups column indices by key; `keys[j]` is the key of column `j`.
    fn from_keys(keys: &[u64]) -> Self {
        let mut order: Vec<(u64, u32)> = keys.iter().enumerate().map(|(j, &k)| (k, j as u32)).collect();
        order.sort_unstable();
        let mut out = HashTable {
            keys: Vec::new(),
            offsets: vec![0],
            members: Vec::with_capacity(order.len()),
        };
        for (key, j) in order {
            if out.keys.last() != Some(&key) {
                if !out.keys.is_empty() {
                    out.offsets.push(out.members.len() as u32);
                }
                out.keys.push(key);
            }
            out.members.push(j);
        }
        out.offsets.push(out.members.len() as u32);
        if out.keys.is_empty() {
            out.offsets = vec![0];
        }
        out
    }

    /// Rebuilds a table from `(key, bucket)` pairs, validating structure.
    pub fn from_buckets(buckets: Vec<(u64, Vec<u32>)>, n: usize) -> Result<Self> {
        let mut out = HashTable {
            keys: Vec::with_capacity(buckets.len()),
            offsets: vec![0],
            members: Vec::with_capacity(n),
        };
        for (key, members) in buckets {
            if out.keys.last().is_some_and(|last| *last >= key) {
                return Err(bad_args("bucket keys must be strictly increasing"));
            }
            if members.is_empty() {
                return Err(bad_args("empty bucket"));
            }
            out.keys.push(key);
            out.members.extend(members);
            out.offsets.push(out.members.len() as u32);
        }
        let mut seen = vec![false; n];
        for &j in &out.members {
            let slot = seen
                .get_mut(j as usize)
                .ok_or_else(|| bad_args(format!("bucket member {j} out of range")))?;
            if *slot {
                return Err(bad_args(format!("column {j} appears twice in one table")));
            }
            *slot = true;
        }
        if out.members.len() != n {
            return Err(bad_args("table does not cover every column"));
        }
        Ok(out)
    }

    pub fn bucket(&self, key: u64) -> &[u32] {
        match self.keys.binary_search(&key) {
            Ok(pos) => &self.members[self.offsets[pos] as usize..self.offsets[pos + 1] as usize],
            Err(_) => &[],
        }
    }

    pub fn buckets(&self) -> impl Iterator<Item = (u64, &[u32])> + '_ {
        self.keys.iter().enumerate().map(|(pos, &k)| {
            (
                k,
                &self.members[self.offsets[pos] as usize..self.offsets[pos + 1] as usize],
            )
        })
    }

    pub fn bucket_count(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LshIndex {
    s: usize,
    q: usize,
    seed: u64,
    dim: usize,
    n: usize,
    /// `q · s` hyperplanes of length `dim`; hyperplane `t · s + i` is bit `i`
    /// of table `t`.
    hyperplanes: Vec<f64>,
    tables: Vec<HashTable>,
}

/// Outcome of one candidate-retrieval query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryReport {
    /// Distinct non-excluded columns whose correlation was evaluated.
    pub candidates_examined: usize,
    pub chosen: Option<usize>,
    /// The choice came from a full scan rather than from the buckets.
    pub exact_fallback_used: bool,
    /// `|⟨A_j, r⟩|` for the chosen column.
    pub abs_correlation: f64,
    /// `|⟨A_j, r⟩| / ‖r‖`, logged to compare against the similar-neighbour bound.
    pub similarity: f64,
}

impl QueryReport {
    fn empty() -> Self {
        Self {
            candidates_examined: 0,
            chosen: None,
            exact_fallback_used: false,
            abs_correlation: 0.0,
            similarity: 0.0,
        }
    }
}

/// `⌈log₂ n⌉` bits per key.
pub fn default_bits(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// `⌈√n⌉` tables.
pub fn default_tables(n: usize) -> usize {
    let r = (n as f64).sqrt().ceil() as usize;
    // guard the float rounding at perfect squares
    if r > 0 && (r - 1) * (r - 1) >= n {
        r - 1
    } else {
        r.max(1)
    }
}

/// Hashes every column of `a` into `q` tables of `s`-bit keys.
pub fn build_index(a: &DenseMatrix, s: usize, q: usize, seed: u64) -> Result<LshIndex> {
    if s == 0 || s > 63 {
        return Err(bad_args(format!("bits per key must lie in 1..=63, got {s}")));
    }
    if q == 0 {
        return Err(bad_args("at least one hash table is required"));
    }
    let (m, n) = (a.rows(), a.cols());
    if n > u32::MAX as usize {
        return Err(bad_args("too many columns for 32-bit bucket entries"));
    }
    let planes = q * s;
    let mut rng = Stream::Hyperplanes.rng(seed);
    let hyperplanes: Vec<f64> = (0..planes * m).map(|_| rng.sample(StandardNormal)).collect();

    // keys[t * n + j]: key of column j in table t
    let mut keys = vec![0u64; q * n];
    let mut proj = vec![0.0f64; planes * BUILD_BLOCK];
    for start in (0..n).step_by(BUILD_BLOCK) {
        let width = BUILD_BLOCK.min(n - start);
        // proj (planes × width, column-major) = H (planes × m, row-major) · A_block (m × width)
        unsafe {
            matrixmultiply::dgemm(
                planes,
                m,
                width,
                1.0,
                hyperplanes.as_ptr(),
                m as isize,
                1,
                a.as_slice()[start * m..].as_ptr(),
                1,
                m as isize,
                0.0,
                proj.as_mut_ptr(),
                1,
                planes as isize,
            );
        }
        for c in 0..width {
            let col = &proj[c * planes..(c + 1) * planes];
            for t in 0..q {
                keys[t * n + start + c] = key_from_projections(&col[t * s..(t + 1) * s]);
            }
        }
    }
    let tables = (0..q)
        .map(|t| HashTable::from_keys(&keys[t * n..(t + 1) * n]))
        .collect();
    Ok(LshIndex {
        s,
        q,
        seed,
        dim: m,
        n,
        hyperplanes,
        tables,
    })
}

#[inline]
fn key_from_projections(proj: &[f64]) -> u64 {
    proj.iter()
        .enumerate()
        .fold(0u64, |key, (i, &p)| if p >= 0.0 { key | 1 << i } else { key })
}

impl LshIndex {
    /// Reassembles an index from serialized parts.
    pub fn from_parts(
        s: usize,
        q: usize,
        seed: u64,
        dim: usize,
        n: usize,
        hyperplanes: Vec<f64>,
        tables: Vec<HashTable>,
    ) -> Result<Self> {
        if s == 0 || s > 63 || q == 0 {
            return Err(bad_args(format!("invalid index shape s = {s}, q = {q}")));
        }
        if hyperplanes.len() != q * s * dim {
            return Err(bad_args("hyperplane block has the wrong length"));
        }
        if tables.len() != q {
            return Err(bad_args(format!("expected {q} tables, found {}", tables.len())));
        }
        if tables.iter().flat_map(|t| t.keys.iter()).any(|k| k >> s != 0) {
            return Err(bad_args(format!("bucket key wider than {s} bits")));
        }
        Ok(Self {
            s,
            q,
            seed,
            dim,
            n,
            hyperplanes,
            tables,
        })
    }

    pub fn bits(&self) -> usize {
        self.s
    }

    pub fn table_count(&self) -> usize {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Length of the indexed vectors (`m`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of indexed columns (`n`).
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hyperplanes(&self) -> &[f64] {
        &self.hyperplanes
    }

    pub fn tables(&self) -> &[HashTable] {
        &self.tables
    }

    /// Key of `v` in each table.
    pub fn keys_of(&self, v: &[f64]) -> Vec<u64> {
        assert_eq!(v.len(), self.dim, "vector length differs from the index dimension");
        let proj: Vec<f64> = self.hyperplanes.chunks_exact(self.dim).map(|h| dot(h, v)).collect();
        proj.chunks_exact(self.s).map(key_from_projections).collect()
    }

    /// Keys of `r` and of `−r` in each table, from a single projection pass.
    fn signed_keys(&self, r: &[f64]) -> Vec<(u64, u64)> {
        let proj: Vec<f64> = self.hyperplanes.chunks_exact(self.dim).map(|h| dot(h, r)).collect();
        proj.chunks_exact(self.s)
            .map(|p| {
                let pos = key_from_projections(p);
                let neg = p
                    .iter()
                    .enumerate()
                    .fold(0u64, |key, (i, &v)| if -v >= 0.0 { key | 1 << i } else { key });
                (pos, neg)
            })
            .collect()
    }
}

/// Approximate `argmax_{j ∉ exclude} |⟨A_j, r⟩|` over the columns that share
/// a bucket with `r` or `−r` in at least one table.
pub fn query_max_abs_correlation(
    index: &LshIndex,
    a: &DenseMatrix,
    r: &[f64],
    exclude: &SupportSet,
) -> (Option<usize>, QueryReport) {
    assert_eq!(a.cols(), index.n, "index was built over a different matrix");
    assert_eq!(a.rows(), index.dim, "index was built over a different matrix");
    let mut report = QueryReport::empty();
    let r_norm = norm(r);
    if !(r_norm > 0.0) || !r_norm.is_finite() {
        return (None, report);
    }
    let mut candidates: Vec<u32> = Vec::new();
    for (table, (pos, neg)) in index.tables.iter().zip(index.signed_keys(r)) {
        candidates.extend_from_slice(table.bucket(pos));
        if neg != pos {
            candidates.extend_from_slice(table.bucket(neg));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut best: Option<(usize, f64)> = None;
    for j in candidates.into_iter().map(|j| j as usize) {
        if exclude.contains(j) {
            continue;
        }
        report.candidates_examined += 1;
        let c = dot(a.column(j), r).abs();
        if best.is_none_or(|(_, v)| c > v) {
            best = Some((j, c));
        }
    }
    if let Some((j, c)) = best {
        report.chosen = Some(j);
        report.abs_correlation = c;
        report.similarity = c / r_norm;
    }
    (report.chosen, report)
}
