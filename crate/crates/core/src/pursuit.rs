//! Encoding novel data against trained multilevel dictionaries.
//!
//! Multilevel pursuit (MulP) picks one atom per level by correlate-and-max
//! on the running residual. The ensemble variant does the same against each
//! of a level's D sub-dictionaries and subtracts the mean of the D one-sparse
//! approximations.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::khyperline::correlate_and_max;
use crate::mld::{MultilevelDictionary, RobustMultilevelDictionary};
use crate::numerics::{axpy, Matrix};
use crate::scalar::Scalar;

/// One atom selection: `coefficient · Ψ_level[:, index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeEntry<T> {
    pub level: usize,
    pub index: usize,
    pub coefficient: T,
}

/// MulP code of a single vector, one entry per level used.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode<T> {
    pub entries: Vec<CodeEntry<T>>,
    pub residual: Vec<T>,
}

impl<T: Scalar> SparseCode<T> {
    pub fn levels_used(&self) -> usize {
        self.entries.len()
    }
}

/// Ensemble code: `entries[l]` holds one selection per sub-dictionary of level `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCode<T> {
    pub entries: Vec<Vec<CodeEntry<T>>>,
    pub residual: Vec<T>,
}

impl<T: Scalar> EnsembleCode<T> {
    pub fn levels_used(&self) -> usize {
        self.entries.len()
    }

    pub fn rounds(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }
}

/// Multiply-add counter for the complexity probe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiply_adds: u64,
}

fn check_levels(levels: usize, available: usize) -> Result<()> {
    if levels > available {
        return Err(Error::InvalidArgument(format!(
            "requested {levels} levels, dictionary has {available}"
        )));
    }
    Ok(())
}

fn check_dim(len: usize, m: usize) -> Result<()> {
    if len != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: len,
        });
    }
    Ok(())
}

/// Encodes `y` with the first `levels` levels of `dict`.
pub fn mulp_encode<T: Scalar>(
    y: &[T],
    dict: &MultilevelDictionary<T>,
    levels: usize,
) -> Result<SparseCode<T>> {
    mulp_encode_counted(y, dict, levels, &mut OpCount::default())
}

/// [`mulp_encode`] that also tallies the multiply-adds it performs.
pub fn mulp_encode_counted<T: Scalar>(
    y: &[T],
    dict: &MultilevelDictionary<T>,
    levels: usize,
    ops: &mut OpCount,
) -> Result<SparseCode<T>> {
    check_dim(y.len(), dict.dim())?;
    check_levels(levels, dict.num_levels())?;
    let m = y.len() as u64;
    let mut r = y.to_vec();
    let mut entries = Vec::with_capacity(levels);
    for (level, atoms) in dict.levels()[..levels].iter().enumerate() {
        let (index, coefficient) = correlate_and_max(atoms, &r);
        axpy(-coefficient, atoms.col(index), &mut r);
        ops.multiply_adds += m * atoms.cols() as u64 + m;
        entries.push(CodeEntry {
            level,
            index,
            coefficient,
        });
    }
    Ok(SparseCode { entries, residual: r })
}

/// Encodes `y` against the first `levels` levels of an ensemble dictionary.
pub fn rmld_encode<T: Scalar>(
    y: &[T],
    dict: &RobustMultilevelDictionary<T>,
    levels: usize,
) -> Result<EnsembleCode<T>> {
    check_dim(y.len(), dict.dim())?;
    check_levels(levels, dict.num_levels())?;
    let inv_d = T::one() / T::from_usize_lossy(dict.rounds());
    let mut r = y.to_vec();
    let mut mean = vec![T::zero(); y.len()];
    let mut entries = Vec::with_capacity(levels);
    for (level, ensemble) in dict.levels()[..levels].iter().enumerate() {
        mean.iter_mut().for_each(|v| *v = T::zero());
        let mut picks = Vec::with_capacity(ensemble.len());
        for atoms in ensemble {
            let (index, coefficient) = correlate_and_max(atoms, &r);
            axpy(coefficient, atoms.col(index), &mut mean);
            picks.push(CodeEntry {
                level,
                index,
                coefficient,
            });
        }
        for (rk, &a) in r.iter_mut().zip(&mean) {
            *rk -= a * inv_d;
        }
        entries.push(picks);
    }
    Ok(EnsembleCode { entries, residual: r })
}

fn atom<'a, T: Scalar>(levels: &'a [Matrix<T>], e: &CodeEntry<T>) -> Result<&'a [T]> {
    let atoms = levels
        .get(e.level)
        .ok_or_else(|| Error::DictMismatch(format!("code uses level {}", e.level)))?;
    if e.index >= atoms.cols() {
        return Err(Error::DictMismatch(format!(
            "atom {} requested from a level of {}",
            e.index,
            atoms.cols()
        )));
    }
    Ok(atoms.col(e.index))
}

fn check_residual(len: usize, m: usize) -> Result<()> {
    if len != m {
        return Err(Error::DictMismatch(format!(
            "code has dimension {len}, dictionary {m}"
        )));
    }
    Ok(())
}

/// Sum of the code's per-level approximations (the residual is not added).
pub fn reconstruct<T: Scalar>(code: &SparseCode<T>, dict: &MultilevelDictionary<T>) -> Result<Vec<T>> {
    check_residual(code.residual.len(), dict.dim())?;
    let mut out = vec![T::zero(); dict.dim()];
    for e in &code.entries {
        axpy(e.coefficient, atom(dict.levels(), e)?, &mut out);
    }
    Ok(out)
}

/// Sum over levels of the ensemble-mean approximations.
pub fn reconstruct_ensemble<T: Scalar>(
    code: &EnsembleCode<T>,
    dict: &RobustMultilevelDictionary<T>,
) -> Result<Vec<T>> {
    let m = dict.dim();
    check_residual(code.residual.len(), m)?;
    let mut out = vec![T::zero(); m];
    let mut mean = vec![T::zero(); m];
    for picks in &code.entries {
        if picks.len() != dict.rounds() {
            return Err(Error::DictMismatch(format!(
                "code has {} rounds, dictionary {}",
                picks.len(),
                dict.rounds()
            )));
        }
        mean.iter_mut().for_each(|v| *v = T::zero());
        let inv_d = T::one() / T::from_usize_lossy(picks.len());
        for (d, e) in picks.iter().enumerate() {
            let level = dict
                .levels()
                .get(e.level)
                .ok_or_else(|| Error::DictMismatch(format!("code uses level {}", e.level)))?;
            let atoms = &level[d];
            if e.index >= atoms.cols() {
                return Err(Error::DictMismatch(format!(
                    "atom {} requested from a level of {}",
                    e.index,
                    atoms.cols()
                )));
            }
            axpy(e.coefficient, atoms.col(e.index), &mut mean);
        }
        for (o, &a) in out.iter_mut().zip(&mean) {
            *o += a * inv_d;
        }
    }
    Ok(out)
}

/// MulP codes for every column of `data`, computed in parallel.
pub fn encode_columns<T: Scalar>(
    data: &Matrix<T>,
    dict: &MultilevelDictionary<T>,
    levels: usize,
) -> Result<Vec<SparseCode<T>>> {
    check_dim(data.rows(), dict.dim())?;
    (0..data.cols())
        .into_par_iter()
        .map(|i| mulp_encode(data.col(i), dict, levels))
        .collect()
}

pub fn encode_columns_robust<T: Scalar>(
    data: &Matrix<T>,
    dict: &RobustMultilevelDictionary<T>,
    levels: usize,
) -> Result<Vec<EnsembleCode<T>>> {
    check_dim(data.rows(), dict.dim())?;
    (0..data.cols())
        .into_par_iter()
        .map(|i| rmld_encode(data.col(i), dict, levels))
        .collect()
}

/// Approximations `data − residual` of encoded columns, as a matrix.
pub fn approximation_matrix<T: Scalar>(data: &Matrix<T>, residuals: &[&[T]]) -> Result<Matrix<T>> {
    if residuals.len() != data.cols() {
        return Err(Error::SizeMismatch {
            left: data.cols(),
            right: residuals.len(),
        });
    }
    let mut out = data.clone();
    for (i, r) in residuals.iter().enumerate() {
        check_dim(r.len(), data.rows())?;
        for (o, &v) in out.col_mut(i).iter_mut().zip(r.iter()) {
            *o -= v;
        }
    }
    Ok(out)
}

/// Mean squared residual per entry, `Σ‖r_i‖² / (M·T)`.
pub fn mse_of_residuals<T: Scalar>(residuals: &[&[T]]) -> Result<T> {
    let Some(first) = residuals.first() else {
        return Err(Error::EmptyCodes);
    };
    let m = first.len();
    let mut total = T::zero();
    for r in residuals {
        check_dim(r.len(), m)?;
        total += r.iter().map(|&v| v * v).sum::<T>();
    }
    Ok(total / T::from_usize_lossy(m * residuals.len()))
}

/// MSE of MulP on `data` using the first `levels` levels.
pub fn mulp_mse<T: Scalar>(data: &Matrix<T>, dict: &MultilevelDictionary<T>, levels: usize) -> Result<T> {
    let codes = encode_columns(data, dict, levels)?;
    let r: Vec<&[T]> = codes.iter().map(|c| c.residual.as_slice()).collect();
    mse_of_residuals(&r)
}

pub fn rmld_mse<T: Scalar>(
    data: &Matrix<T>,
    dict: &RobustMultilevelDictionary<T>,
    levels: usize,
) -> Result<T> {
    let codes = encode_columns_robust(data, dict, levels)?;
    let r: Vec<&[T]> = codes.iter().map(|c| c.residual.as_slice()).collect();
    mse_of_residuals(&r)
}

/// Codes as a `ΣK_l × T` coefficient matrix, level blocks stacked in order.
pub fn code_matrix<T: Scalar>(codes: &[SparseCode<T>], per_level_k: &[usize]) -> Result<Matrix<T>> {
    let offsets = block_offsets(per_level_k, 1);
    let mut a = Matrix::zeros(offsets[per_level_k.len()], codes.len());
    for (i, c) in codes.iter().enumerate() {
        for e in &c.entries {
            a[(slot(&offsets, per_level_k, e, 0, 1)?, i)] += e.coefficient;
        }
    }
    Ok(a)
}

/// Ensemble codes as a `D·ΣK_l × T` matrix with rows ordered (level, round,
/// atom) and coefficients scaled by 1/D, so that it synthesizes the averaged
/// approximation.
pub fn ensemble_code_matrix<T: Scalar>(
    codes: &[EnsembleCode<T>],
    per_level_k: &[usize],
    rounds: usize,
) -> Result<Matrix<T>> {
    let offsets = block_offsets(per_level_k, rounds);
    let inv_d = T::one() / T::from_usize_lossy(rounds.max(1));
    let mut a = Matrix::zeros(offsets[per_level_k.len()], codes.len());
    for (i, c) in codes.iter().enumerate() {
        for picks in &c.entries {
            if picks.len() != rounds {
                return Err(Error::DictMismatch(format!("code has {} rounds, expected {rounds}", picks.len())));
            }
            for (d, e) in picks.iter().enumerate() {
                a[(slot(&offsets, per_level_k, e, d, rounds)?, i)] += e.coefficient * inv_d;
            }
        }
    }
    Ok(a)
}

fn block_offsets(per_level_k: &[usize], rounds: usize) -> Vec<usize> {
    let mut offsets = vec![0];
    for &k in per_level_k {
        offsets.push(offsets.last().unwrap() + k * rounds);
    }
    offsets
}

fn slot<T>(offsets: &[usize], per_level_k: &[usize], e: &CodeEntry<T>, round: usize, rounds: usize) -> Result<usize> {
    match per_level_k.get(e.level) {
        Some(&k) if e.index < k && round < rounds => Ok(offsets[e.level] + round * k + e.index),
        _ => Err(Error::DictMismatch(format!(
            "entry (level {}, atom {}) outside dictionary shape {per_level_k:?}",
            e.level, e.index
        ))),
    }
}

/// Test MSE after 0, 1, …, L levels of MulP, from a single encoding pass.
pub fn mulp_level_mse<T: Scalar>(data: &Matrix<T>, dict: &MultilevelDictionary<T>) -> Result<Vec<T>> {
    check_dim(data.rows(), dict.dim())?;
    level_mse(data, dict.num_levels(), |y| {
        let code = mulp_encode(y, dict, dict.num_levels())?;
        let mut r = code.residual;
        let mut energies = vec![r.iter().map(|&v| v * v).sum::<T>()];
        for e in code.entries.iter().rev() {
            axpy(e.coefficient, dict.level(e.level).col(e.index), &mut r);
            energies.push(r.iter().map(|&v| v * v).sum());
        }
        energies.reverse();
        Ok(energies)
    })
}

/// Ensemble counterpart of [`mulp_level_mse`].
pub fn rmld_level_mse<T: Scalar>(data: &Matrix<T>, dict: &RobustMultilevelDictionary<T>) -> Result<Vec<T>> {
    check_dim(data.rows(), dict.dim())?;
    level_mse(data, dict.num_levels(), |y| {
        (0..=dict.num_levels())
            .map(|l| Ok(rmld_encode(y, dict, l)?.residual.iter().map(|&v| v * v).sum()))
            .collect()
    })
}

fn level_mse<T: Scalar>(
    data: &Matrix<T>,
    levels: usize,
    per_column: impl Fn(&[T]) -> Result<Vec<T>> + Sync,
) -> Result<Vec<T>> {
    if data.cols() == 0 {
        return Err(Error::EmptyCodes);
    }
    let per: Vec<Vec<T>> = (0..data.cols())
        .into_par_iter()
        .map(|i| per_column(data.col(i)))
        .collect::<Result<_>>()?;
    let denom = T::from_usize_lossy(data.rows() * data.cols());
    Ok((0..=levels)
        .map(|l| per.iter().map(|e| e[l]).sum::<T>() / denom)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, norm, random_unit_vector, standard_normal, RngSeed};

    fn e(m: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    }

    fn random_dict(m: usize, ks: &[usize], seed: u64) -> MultilevelDictionary<f64> {
        let mut rng = RngSeed(seed).rng();
        let levels = ks
            .iter()
            .map(|&k| {
                let cols: Vec<Vec<f64>> = (0..k).map(|_| random_unit_vector(m, &mut rng)).collect();
                Matrix::from_columns(m, &cols).unwrap()
            })
            .collect();
        MultilevelDictionary::new(levels, 0.0).unwrap()
    }

    #[test]
    fn two_level_example() {
        let l1 = Matrix::from_columns(2, &[e(2, 0), e(2, 1)]).unwrap();
        let l2 = Matrix::from_columns(2, &[e(2, 0)]).unwrap();
        let dict = MultilevelDictionary::new(vec![l1, l2], 0.0).unwrap();
        let code = mulp_encode(&[3.0, 4.0], &dict, 2).unwrap();
        assert_eq!(code.entries[0], CodeEntry { level: 0, index: 1, coefficient: 4.0 });
        assert_eq!(code.entries[1], CodeEntry { level: 1, index: 0, coefficient: 3.0 });
        assert_eq!(code.residual, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_vector() {
        let dict = random_dict(4, &[3, 3], 1);
        let code = mulp_encode(&[0.0; 4], &dict, 2).unwrap();
        for en in &code.entries {
            assert_eq!((en.index, en.coefficient), (0, 0.0));
        }
        assert_eq!(code.residual, vec![0.0; 4]);
        assert_eq!(reconstruct(&code, &dict).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn greedy_choice_and_energy_identity() {
        let dict = random_dict(8, &[4, 4, 4], 2);
        let mut rng = RngSeed(3).rng();
        for _ in 0..50 {
            let y: Vec<f64> = (0..8).map(|_| standard_normal(&mut rng)).collect();
            let code = mulp_encode(&y, &dict, 3).unwrap();
            let mut r = y.clone();
            let mut prev = norm(&r);
            for en in &code.entries {
                let atoms = dict.level(en.level);
                let brute = (0..atoms.cols())
                    .map(|j| dot(atoms.col(j), &r).abs())
                    .fold(0.0, f64::max);
                assert_eq!(dot(atoms.col(en.index), &r).abs(), brute);
                axpy(-en.coefficient, atoms.col(en.index), &mut r);
                assert!(dot(atoms.col(en.index), &r).abs() <= 1e-10 * prev);
                let now = norm(&r);
                assert!(now <= prev + 1e-12);
                prev = now;
            }
            let coef_sq: f64 = code.entries.iter().map(|e| e.coefficient * e.coefficient).sum();
            let lhs = dot(&y, &y);
            let rhs = coef_sq + dot(&code.residual, &code.residual);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs);
        }
    }

    #[test]
    fn roundtrip_reconstruction() {
        let dict = random_dict(6, &[5, 3, 2], 4);
        let mut rng = RngSeed(5).rng();
        for _ in 0..100 {
            let y: Vec<f64> = (0..6).map(|_| standard_normal(&mut rng)).collect();
            let code = mulp_encode(&y, &dict, 3).unwrap();
            let rec = reconstruct(&code, &dict).unwrap();
            let back: Vec<f64> = rec.iter().zip(&code.residual).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = back.iter().zip(&y).map(|(a, b)| a - b).collect();
            assert!(norm(&diff) <= 1e-10 * norm(&y));
        }
    }

    #[test]
    fn basis_vector_reconstructs_itself() {
        let l1 = Matrix::from_columns(3, &[e(3, 0), e(3, 2)]).unwrap();
        let dict = MultilevelDictionary::new(vec![l1], 0.0).unwrap();
        let code = mulp_encode(&e(3, 0), &dict, 1).unwrap();
        assert_eq!(reconstruct(&code, &dict).unwrap(), e(3, 0));
    }

    #[test]
    fn dimension_and_level_errors() {
        let dict = random_dict(4, &[2, 2], 6);
        assert!(matches!(mulp_encode(&[1.0; 3], &dict, 1), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(mulp_encode(&[1.0; 4], &dict, 3), Err(Error::InvalidArgument(_))));
        let bad = SparseCode { entries: vec![CodeEntry { level: 2, index: 0, coefficient: 1.0 }], residual: vec![0.0; 4] };
        assert!(matches!(reconstruct(&bad, &dict), Err(Error::DictMismatch(_))));
        let bad = SparseCode { entries: vec![], residual: vec![0.0; 5] };
        assert!(matches!(reconstruct(&bad, &dict), Err(Error::DictMismatch(_))));
    }

    #[test]
    fn fewer_levels_than_trained() {
        let dict = random_dict(5, &[3, 3, 3], 7);
        let code = mulp_encode(&[1.0, 2.0, 0.0, -1.0, 0.5], &dict, 1).unwrap();
        assert_eq!(code.levels_used(), 1);
    }

    #[test]
    fn op_count_is_m_times_sum_k() {
        let dict = random_dict(8, &[4, 6, 2], 8);
        let mut ops = OpCount::default();
        mulp_encode_counted(&[1.0; 8], &dict, 3, &mut ops).unwrap();
        assert_eq!(ops.multiply_adds, 8 * 12 + 8 * 3);
    }

    fn robust_from(levels: Vec<Vec<Matrix<f64>>>) -> RobustMultilevelDictionary<f64> {
        RobustMultilevelDictionary::new(levels, 10, 0.0).unwrap()
    }

    #[test]
    fn single_round_ensemble_matches_mulp() {
        let dict = random_dict(6, &[4, 4], 9);
        let rdict = robust_from(dict.levels().iter().map(|l| vec![l.clone()]).collect());
        let mut rng = RngSeed(10).rng();
        for _ in 0..20 {
            let y: Vec<f64> = (0..6).map(|_| standard_normal(&mut rng)).collect();
            let a = mulp_encode(&y, &dict, 2).unwrap();
            let b = rmld_encode(&y, &rdict, 2).unwrap();
            assert_eq!(a.residual, b.residual);
            for (x, picks) in a.entries.iter().zip(&b.entries) {
                assert_eq!(picks.len(), 1);
                assert_eq!(x, &picks[0]);
            }
        }
    }

    #[test]
    fn identical_rounds_average_to_single() {
        let dict = random_dict(5, &[3, 3], 11);
        let rdict = robust_from(dict.levels().iter().map(|l| vec![l.clone(); 4]).collect());
        let y = [0.3, -1.2, 0.8, 2.0, -0.1];
        let a = mulp_encode(&y, &dict, 2).unwrap();
        let b = rmld_encode(&y, &rdict, 2).unwrap();
        for (x, z) in a.residual.iter().zip(&b.residual) {
            assert!((x - z).abs() < 1e-14);
        }
    }

    #[test]
    fn ensemble_roundtrip_and_energy_decrease() {
        let levels: Vec<Vec<Matrix<f64>>> = (0..3)
            .map(|l| (0..3).map(|d| random_dict(7, &[4], 100 + 10 * l + d).levels()[0].clone()).collect())
            .collect();
        let rdict = robust_from(levels);
        let mut rng = RngSeed(12).rng();
        for _ in 0..50 {
            let y: Vec<f64> = (0..7).map(|_| standard_normal(&mut rng)).collect();
            let code = rmld_encode(&y, &rdict, 3).unwrap();
            let rec = reconstruct_ensemble(&code, &rdict).unwrap();
            let diff: Vec<f64> = rec.iter().zip(&code.residual).zip(&y).map(|((a, r), y)| a + r - y).collect();
            assert!(norm(&diff) <= 1e-10 * norm(&y));
            let mut prev = norm(&y);
            for l in 1..=3 {
                let now = norm(&rmld_encode(&y, &rdict, l).unwrap().residual);
                assert!(now <= prev + 1e-12);
                prev = now;
            }
        }
    }

    #[test]
    fn level_curves_match_direct_encoding() {
        let dict = random_dict(6, &[4, 3, 2], 15);
        let mut rng = RngSeed(16).rng();
        let data = Matrix::from_col_major(6, 30, (0..180).map(|_| standard_normal(&mut rng)).collect()).unwrap();
        let curve = mulp_level_mse(&data, &dict).unwrap();
        assert_eq!(curve.len(), 4);
        for (l, &c) in curve.iter().enumerate() {
            assert!((c - mulp_mse(&data, &dict, l).unwrap()).abs() < 1e-12);
        }
        let rdict = RobustMultilevelDictionary::new(
            dict.levels().iter().map(|l| vec![l.clone(), l.clone()]).collect(),
            10,
            0.0,
        )
        .unwrap();
        let rc = rmld_level_mse(&data, &rdict).unwrap();
        for (a, b) in rc.iter().zip(&curve) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn code_matrix_synthesizes_approximation() {
        let dict = random_dict(5, &[3, 2], 17);
        let mut rng = RngSeed(18).rng();
        let data = Matrix::from_col_major(5, 12, (0..60).map(|_| standard_normal(&mut rng)).collect()).unwrap();
        let codes = encode_columns(&data, &dict, 2).unwrap();
        let a = code_matrix(&codes, &dict.per_level_k()).unwrap();
        assert_eq!(a.shape(), (5, 12));
        let stacked = Matrix::from_columns(5, &dict.levels().iter().flat_map(|l| l.columns()).collect::<Vec<_>>()).unwrap();
        let synth = stacked.matmul(&a).unwrap();
        for (i, c) in codes.iter().enumerate() {
            let rec = reconstruct(c, &dict).unwrap();
            for (x, y) in synth.col(i).iter().zip(&rec) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let rdict = RobustMultilevelDictionary::new(
            dict.levels().iter().map(|l| vec![l.clone(), l.clone()]).collect(),
            4,
            0.0,
        )
        .unwrap();
        let rc = encode_columns_robust(&data, &rdict, 2).unwrap();
        let ra = ensemble_code_matrix(&rc, &rdict.per_level_k(), 2).unwrap();
        assert_eq!(ra.rows(), 10);
        assert!(code_matrix(&codes, &[3]).is_err());
    }

    #[test]
    fn mse_non_increasing_in_levels() {
        let dict = random_dict(6, &[4, 4, 4, 4], 13);
        let mut rng = RngSeed(14).rng();
        let data = Matrix::from_col_major(6, 40, (0..240).map(|_| standard_normal(&mut rng)).collect()).unwrap();
        let mut prev = f64::INFINITY;
        for l in 0..=4 {
            let m = mulp_mse(&data, &dict, l).unwrap();
            assert!(m <= prev);
            prev = m;
        }
    }
}
