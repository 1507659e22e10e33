//! Little-endian binary containers for matrices, problems and LSH indexes.
//!
//! See `docs/file-formats.md` for the byte layouts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::ensemble::{GroundTruth, MeasurementProblem};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SupportSet};
use crate::lsh::{HashTable, LshIndex};

pub const MATRIX_MAGIC: &[u8; 5] = b"SREC1";
pub const PROBLEM_TAG: &[u8; 4] = b"PRB1";
pub const INDEX_MAGIC: &[u8; 5] = b"SLSH1";

const FLAG_TRUTH: u8 = 1;
const FLAG_NOISE: u8 = 2;

fn format_err(what: impl Into<String>) -> Error {
    Error::Format(what.into())
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| format_err(format!("{v} does not fit in 32 bits")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => format_err("truncated input"),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    Ok(u32::from_le_bytes(get_bytes(r)?) as usize)
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(get_bytes(r)?))
}

fn get_f64s(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    (0..len).map(|_| Ok(f64::from_le_bytes(get_bytes(r)?))).collect()
}

fn expect_magic(r: &mut impl Read, magic: &[u8]) -> Result<()> {
    let mut buf = vec![0u8; magic.len()];
    r.read_exact(&mut buf).map_err(|_| format_err("truncated header"))?;
    if buf != magic {
        return Err(format_err(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&buf)
        )));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(format_err("trailing bytes after container")),
    }
}

pub fn write_matrix(w: &mut impl Write, a: &DenseMatrix) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    put_u32(w, a.rows())?;
    put_u32(w, a.cols())?;
    put_f64s(w, a.as_slice())
}

fn read_matrix_body(r: &mut impl Read) -> Result<DenseMatrix> {
    expect_magic(r, MATRIX_MAGIC)?;
    let m = get_u32(r)?;
    let n = get_u32(r)?;
    let data = get_f64s(r, m.checked_mul(n).ok_or_else(|| format_err("matrix too large"))?)?;
    DenseMatrix::from_col_major(m, n, data)
}

pub fn read_matrix(r: &mut impl Read) -> Result<DenseMatrix> {
    let a = read_matrix_body(r)?;
    expect_eof(r)?;
    Ok(a)
}

/// Matrix container followed by the problem extension.
pub fn write_problem(w: &mut impl Write, p: &MeasurementProblem) -> Result<()> {
    write_matrix(w, &p.a)?;
    w.write_all(PROBLEM_TAG)?;
    put_f64s(w, &p.b)?;
    let flags = if p.truth.is_some() { FLAG_TRUTH } else { 0 } | if p.noise.is_some() { FLAG_NOISE } else { 0 };
    w.write_all(&[flags])?;
    w.write_all(&p.seed.to_le_bytes())?;
    if let Some(t) = &p.truth {
        put_f64s(w, &t.x)?;
    }
    if let Some(e) = &p.noise {
        put_f64s(w, e)?;
    }
    Ok(())
}

pub fn read_problem(r: &mut impl Read) -> Result<MeasurementProblem> {
    let a = read_matrix_body(r)?;
    expect_magic(r, PROBLEM_TAG)?;
    let (m, n) = (a.rows(), a.cols());
    let b = get_f64s(r, m)?;
    let [flags] = get_bytes::<1>(r)?;
    if flags & !(FLAG_TRUTH | FLAG_NOISE) != 0 {
        return Err(format_err(format!("unknown problem flags {flags:#04x}")));
    }
    let seed = get_u64(r)?;
    let truth = if flags & FLAG_TRUTH != 0 {
        let x = get_f64s(r, n)?;
        let support = SupportSet::from_unsorted(
            x.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect(),
        );
        Some(GroundTruth { x, support })
    } else {
        None
    };
    let noise = if flags & FLAG_NOISE != 0 {
        Some(get_f64s(r, m)?)
    } else {
        None
    };
    expect_eof(r)?;
    MeasurementProblem::new(a, b, truth, noise, seed)
}

pub fn write_index(w: &mut impl Write, index: &LshIndex) -> Result<()> {
    w.write_all(INDEX_MAGIC)?;
    put_u32(w, index.dim())?;
    put_u32(w, index.len())?;
    put_u32(w, index.bits())?;
    put_u32(w, index.table_count())?;
    w.write_all(&index.seed().to_le_bytes())?;
    put_f64s(w, index.hyperplanes())?;
    for table in index.tables() {
        put_u32(w, table.bucket_count())?;
        for (key, members) in table.buckets() {
            w.write_all(&key.to_le_bytes())?;
            put_u32(w, members.len())?;
            for &j in members {
                w.write_all(&j.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_index(r: &mut impl Read) -> Result<LshIndex> {
    expect_magic(r, INDEX_MAGIC)?;
    let m = get_u32(r)?;
    let n = get_u32(r)?;
    let s = get_u32(r)?;
    let q = get_u32(r)?;
    let seed = get_u64(r)?;
    let planes = q
        .checked_mul(s)
        .and_then(|v| v.checked_mul(m))
        .ok_or_else(|| format_err("index too large"))?;
    let hyperplanes = get_f64s(r, planes)?;
    let mut tables = Vec::with_capacity(q);
    for _ in 0..q {
        let count = get_u32(r)?;
        let mut buckets = Vec::with_capacity(count.min(n));
        for _ in 0..count {
            let key = get_u64(r)?;
            let len = get_u32(r)?;
            if len > n {
                return Err(format_err("bucket larger than the column count"));
            }
            let members = (0..len)
                .map(|_| Ok(u32::from_le_bytes(get_bytes(r)?)))
                .collect::<Result<Vec<u32>>>()?;
            buckets.push((key, members));
        }
        tables.push(HashTable::from_buckets(buckets, n).map_err(|e| format_err(e.to_string()))?);
    }
    expect_eof(r)?;
    LshIndex::from_parts(s, q, seed, m, n, hyperplanes, tables).map_err(|e| format_err(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_problem(path: impl AsRef<Path>, p: &MeasurementProblem) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_problem(&mut w, p)?;
    w.flush()?;
    Ok(())
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<MeasurementProblem> {
    read_problem(&mut open(path.as_ref())?)
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_matrix(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix(&mut open(path.as_ref())?)
}

pub fn save_index(path: impl AsRef<Path>, index: &LshIndex) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_index(&mut w, index)?;
    w.flush()?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<LshIndex> {
    read_index(&mut open(path.as_ref())?)
}
