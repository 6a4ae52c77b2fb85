//! Binary file formats. All integers are little-endian `u64`, all reals
//! little-endian IEEE-754 `f64`.
//!
//! * `MLDMAT1`: magic, rows, cols, then the entries in column-major order.
//! * `MLDDICT1`: magic, M, L, K_1..K_L, ε, flags (bit 0: robust), D, T_D,
//!   followed by D `MLDMAT1` blocks per level.
//! * `MLDCODE1`: magic, sample count, M, flags (bit 0: ensemble), D, then per
//!   sample the number of levels used, `levels·D` (level, index, coefficient)
//!   triples and the M-entry residual.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mld::{MultilevelDictionary, RobustMultilevelDictionary};
use crate::numerics::Matrix;
use crate::pursuit::{CodeEntry, EnsembleCode, SparseCode};
use crate::scalar::Scalar;

pub const MATRIX_MAGIC: &[u8; 7] = b"MLDMAT1";
pub const DICT_MAGIC: &[u8; 8] = b"MLDDICT1";
pub const CODE_MAGIC: &[u8; 8] = b"MLDCODE1";

const ROBUST_FLAG: u64 = 1;

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_usize<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let v = get_u64(r)?;
    usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in memory")))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8]) -> Result<()> {
    let mut b = vec![0u8; magic.len()];
    r.read_exact(&mut b)?;
    if b != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&b)
        )));
    }
    Ok(())
}

/// Reads `n` reals without trusting `n` for the initial allocation.
fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        out.push(get_f64(r)?);
    }
    Ok(out)
}

pub fn write_matrix<T: Scalar, W: Write>(w: &mut W, m: &Matrix<T>) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    put_u64(w, m.rows() as u64)?;
    put_u64(w, m.cols() as u64)?;
    for &v in m.as_slice() {
        put_f64(w, v.as_f64())?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix<f64>> {
    expect_magic(r, MATRIX_MAGIC)?;
    let rows = get_usize(r, "row count")?;
    let cols = get_usize(r, "column count")?;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format(format!("{rows}x{cols} matrix is too large")))?;
    Matrix::from_col_major(rows, cols, get_f64s(r, n)?)
}

/// A dictionary file holds either kind of dictionary.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredDictionary {
    Plain(MultilevelDictionary<f64>),
    Robust(RobustMultilevelDictionary<f64>),
}

impl StoredDictionary {
    pub fn dim(&self) -> usize {
        match self {
            Self::Plain(d) => d.dim(),
            Self::Robust(d) => d.dim(),
        }
    }

    pub fn num_levels(&self) -> usize {
        match self {
            Self::Plain(d) => d.num_levels(),
            Self::Robust(d) => d.num_levels(),
        }
    }
}

fn write_dict_header<W: Write>(
    w: &mut W,
    m: usize,
    ks: &[usize],
    eps: f64,
    flags: u64,
    rounds: usize,
    subset: usize,
) -> Result<()> {
    w.write_all(DICT_MAGIC)?;
    put_u64(w, m as u64)?;
    put_u64(w, ks.len() as u64)?;
    for &k in ks {
        put_u64(w, k as u64)?;
    }
    put_f64(w, eps)?;
    put_u64(w, flags)?;
    put_u64(w, rounds as u64)?;
    put_u64(w, subset as u64)
}

pub fn write_dictionary<T: Scalar, W: Write>(w: &mut W, d: &MultilevelDictionary<T>) -> Result<()> {
    write_dict_header(w, d.dim(), &d.per_level_k(), d.error_goal().as_f64(), 0, 1, 0)?;
    for level in d.levels() {
        write_matrix(w, level)?;
    }
    Ok(())
}

pub fn write_robust_dictionary<T: Scalar, W: Write>(
    w: &mut W,
    d: &RobustMultilevelDictionary<T>,
) -> Result<()> {
    write_dict_header(
        w,
        d.dim(),
        &d.per_level_k(),
        d.error_goal().as_f64(),
        ROBUST_FLAG,
        d.rounds(),
        d.subset_size(),
    )?;
    for level in d.levels() {
        for sub in level {
            write_matrix(w, sub)?;
        }
    }
    Ok(())
}

fn read_block<R: Read>(r: &mut R, m: usize, k: usize) -> Result<Matrix<f64>> {
    let block = read_matrix(r)?;
    if block.shape() != (m, k) {
        return Err(Error::Format(format!(
            "atom block is {}x{}, header says {m}x{k}",
            block.rows(),
            block.cols()
        )));
    }
    Ok(block)
}

pub fn read_dictionary<R: Read>(r: &mut R) -> Result<StoredDictionary> {
    expect_magic(r, DICT_MAGIC)?;
    let m = get_usize(r, "dimension")?;
    let l = get_usize(r, "level count")?;
    let mut ks = Vec::with_capacity(l.min(1 << 16));
    for _ in 0..l {
        ks.push(get_usize(r, "atom count")?);
    }
    let eps = get_f64(r)?;
    let flags = get_u64(r)?;
    let rounds = get_usize(r, "round count")?;
    let subset = get_usize(r, "subset size")?;
    if flags & !ROBUST_FLAG != 0 {
        return Err(Error::Format(format!("unknown dictionary flags {flags:#x}")));
    }
    if flags & ROBUST_FLAG == 0 {
        let levels = ks.iter().map(|&k| read_block(r, m, k)).collect::<Result<Vec<_>>>()?;
        return MultilevelDictionary::new(levels, eps).map(StoredDictionary::Plain);
    }
    if rounds == 0 {
        return Err(Error::Format("robust dictionary with zero rounds".into()));
    }
    let levels = ks
        .iter()
        .map(|&k| (0..rounds).map(|_| read_block(r, m, k)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RobustMultilevelDictionary::new(levels, subset, eps).map(StoredDictionary::Robust)
}

/// Codes read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredCodes {
    Plain(Vec<SparseCode<f64>>),
    Ensemble(Vec<EnsembleCode<f64>>),
}

fn put_entry<T: Scalar, W: Write>(w: &mut W, e: &CodeEntry<T>) -> Result<()> {
    put_u64(w, e.level as u64)?;
    put_u64(w, e.index as u64)?;
    put_f64(w, e.coefficient.as_f64())
}

fn get_entry<R: Read>(r: &mut R) -> Result<CodeEntry<f64>> {
    Ok(CodeEntry {
        level: get_usize(r, "level")?,
        index: get_usize(r, "atom index")?,
        coefficient: get_f64(r)?,
    })
}

fn put_residual<T: Scalar, W: Write>(w: &mut W, r: &[T], m: usize) -> Result<()> {
    if r.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: r.len(),
        });
    }
    r.iter().try_for_each(|&v| put_f64(w, v.as_f64()))
}

pub fn write_codes<T: Scalar, W: Write>(w: &mut W, codes: &[SparseCode<T>]) -> Result<()> {
    let m = codes.first().map_or(0, |c| c.residual.len());
    w.write_all(CODE_MAGIC)?;
    put_u64(w, codes.len() as u64)?;
    put_u64(w, m as u64)?;
    put_u64(w, 0)?;
    put_u64(w, 1)?;
    for c in codes {
        put_u64(w, c.levels_used() as u64)?;
        c.entries.iter().try_for_each(|e| put_entry(w, e))?;
        put_residual(w, &c.residual, m)?;
    }
    Ok(())
}

pub fn write_ensemble_codes<T: Scalar, W: Write>(w: &mut W, codes: &[EnsembleCode<T>]) -> Result<()> {
    let m = codes.first().map_or(0, |c| c.residual.len());
    let d = codes.iter().find(|c| c.levels_used() > 0).map_or(1, |c| c.rounds());
    w.write_all(CODE_MAGIC)?;
    put_u64(w, codes.len() as u64)?;
    put_u64(w, m as u64)?;
    put_u64(w, ROBUST_FLAG)?;
    put_u64(w, d as u64)?;
    for c in codes {
        put_u64(w, c.levels_used() as u64)?;
        for picks in &c.entries {
            if picks.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "ensemble code with {} rounds among codes with {d}",
                    picks.len()
                )));
            }
            picks.iter().try_for_each(|e| put_entry(w, e))?;
        }
        put_residual(w, &c.residual, m)?;
    }
    Ok(())
}

pub fn read_codes<R: Read>(r: &mut R) -> Result<StoredCodes> {
    expect_magic(r, CODE_MAGIC)?;
    let n = get_usize(r, "sample count")?;
    let m = get_usize(r, "dimension")?;
    let flags = get_u64(r)?;
    let d = get_usize(r, "round count")?;
    if flags & !ROBUST_FLAG != 0 {
        return Err(Error::Format(format!("unknown code flags {flags:#x}")));
    }
    if d == 0 {
        return Err(Error::Format("codes with zero rounds".into()));
    }
    let cap = n.min(1 << 16);
    if flags & ROBUST_FLAG == 0 {
        let mut codes = Vec::with_capacity(cap);
        for _ in 0..n {
            let levels = get_usize(r, "level count")?;
            let entries = (0..levels).map(|_| get_entry(r)).collect::<Result<Vec<_>>>()?;
            codes.push(SparseCode {
                entries,
                residual: get_f64s(r, m)?,
            });
        }
        return Ok(StoredCodes::Plain(codes));
    }
    let mut codes = Vec::with_capacity(cap);
    for _ in 0..n {
        let levels = get_usize(r, "level count")?;
        let entries = (0..levels)
            .map(|_| (0..d).map(|_| get_entry(r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        codes.push(EnsembleCode {
            entries,
            residual: get_f64s(r, m)?,
        });
    }
    Ok(StoredCodes::Ensemble(codes))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_matrix<T: Scalar>(path: impl AsRef<Path>, m: &Matrix<T>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix<f64>> {
    read_matrix(&mut open(path.as_ref())?)
}

pub fn save_dictionary(path: impl AsRef<Path>, d: &StoredDictionary) -> Result<()> {
    let mut w = create(path.as_ref())?;
    match d {
        StoredDictionary::Plain(d) => write_dictionary(&mut w, d)?,
        StoredDictionary::Robust(d) => write_robust_dictionary(&mut w, d)?,
    }
    w.flush()?;
    Ok(())
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<StoredDictionary> {
    read_dictionary(&mut open(path.as_ref())?)
}

pub fn save_codes(path: impl AsRef<Path>, c: &StoredCodes) -> Result<()> {
    let mut w = create(path.as_ref())?;
    match c {
        StoredCodes::Plain(c) => write_codes(&mut w, c)?,
        StoredCodes::Ensemble(c) => write_ensemble_codes(&mut w, c)?,
    }
    w.flush()?;
    Ok(())
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<StoredCodes> {
    read_codes(&mut open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_unit_vector, RngSeed};

    fn unit_block(m: usize, k: usize, seed: u64) -> Matrix<f64> {
        let mut rng = RngSeed(seed).rng();
        let cols: Vec<Vec<f64>> = (0..k).map(|_| random_unit_vector(m, &mut rng)).collect();
        Matrix::from_columns(m, &cols).unwrap()
    }

    #[test]
    fn matrix_layout() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(&buf[..7], b"MLDMAT1");
        assert_eq!(u64::from_le_bytes(buf[7..15].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[23..31].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[31..39].try_into().unwrap()), 3.0);
        assert_eq!(buf.len(), 7 + 16 + 32);
        assert_eq!(read_matrix(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &Matrix::<f64>::identity(3)).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_matrix(&mut bad.as_slice()), Err(Error::Format(_))));
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_matrix(&mut buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn dictionaries_roundtrip() {
        let plain = MultilevelDictionary::new(vec![unit_block(4, 3, 1), unit_block(4, 2, 2)], 0.25).unwrap();
        let mut buf = Vec::new();
        write_dictionary(&mut buf, &plain).unwrap();
        assert_eq!(read_dictionary(&mut buf.as_slice()).unwrap(), StoredDictionary::Plain(plain));

        let robust = RobustMultilevelDictionary::new(
            vec![vec![unit_block(4, 3, 3), unit_block(4, 3, 4)], vec![unit_block(4, 1, 5), unit_block(4, 1, 6)]],
            17,
            0.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_robust_dictionary(&mut buf, &robust).unwrap();
        assert_eq!(read_dictionary(&mut buf.as_slice()).unwrap(), StoredDictionary::Robust(robust));
    }

    #[test]
    fn codes_roundtrip() {
        let codes = vec![
            SparseCode {
                entries: vec![CodeEntry { level: 0, index: 2, coefficient: -1.5 }],
                residual: vec![0.1, 0.2],
            },
            SparseCode { entries: vec![], residual: vec![3.0, 4.0] },
        ];
        let mut buf = Vec::new();
        write_codes(&mut buf, &codes).unwrap();
        assert_eq!(read_codes(&mut buf.as_slice()).unwrap(), StoredCodes::Plain(codes));

        let e = |i| CodeEntry { level: 0, index: i, coefficient: i as f64 };
        let codes = vec![EnsembleCode { entries: vec![vec![e(0), e(1), e(2)]], residual: vec![1.0] }];
        let mut buf = Vec::new();
        write_ensemble_codes(&mut buf, &codes).unwrap();
        assert_eq!(read_codes(&mut buf.as_slice()).unwrap(), StoredCodes::Ensemble(codes));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = unit_block(5, 4, 7);
        save_matrix(&p, &m).unwrap();
        assert_eq!(load_matrix(&p).unwrap(), m);
    }
}
