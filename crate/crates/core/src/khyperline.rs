//! K-hyperline clustering: least-squares fit of K one-dimensional subspaces
//! through the origin, plus the metrics used to compare two clusterings.
//!
//! Each sample is assigned to the atom with the largest absolute correlation
//! (equivalently, the smallest distortion `‖y‖² − (yᵀψ)²`), and each atom is
//! refit as the dominant left singular vector of its cluster.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{
    dominant_left_singular_vector, dot, norm, norm_sq, normalize, random_unit_vector,
    sample_indices, Matrix, PowerIteration, RngSeed,
};
use crate::scalar::Scalar;

/// How atoms are seeded before the first assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// K distinct nonzero data columns, normalized.
    RandomSamples,
    /// K independent uniformly random unit vectors.
    RandomUnit,
}

/// What to do when a cluster loses all of its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyClusterPolicy {
    /// Move the sample with the largest distortion into the empty cluster and
    /// use it as the new atom.
    ReseedWorst,
    /// Leave the atom where it is.
    KeepAtom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_outer_iters: usize,
    pub init: InitStrategy,
    pub seed: RngSeed,
    pub empty_cluster: EmptyClusterPolicy,
    pub power: PowerIteration,
    /// Independent initializations; the lowest-distortion fit is kept.
    pub restarts: usize,
}

impl ClusteringConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_outer_iters: 100,
            init: InitStrategy::RandomSamples,
            seed: RngSeed(0),
            empty_cluster: EmptyClusterPolicy::ReseedWorst,
            power: PowerIteration::default(),
            restarts: 1,
        }
    }

    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidK("K must be at least 1".into()));
        }
        if self.max_outer_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument(
                "max_outer_iters and restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`fit`].
#[derive(Debug, Clone)]
pub struct Clustering<T> {
    /// Unit-norm atoms, one per column (M × K).
    pub atoms: Matrix<T>,
    pub assignments: Vec<usize>,
    /// `yᵢᵀψ` for the assigned atom; sign preserved.
    pub coefficients: Vec<T>,
    pub distortion: T,
    /// Total distortion after each outer iteration's centroid update.
    pub history: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> Clustering<T> {
    pub fn k(&self) -> usize {
        self.atoms.cols()
    }

    pub fn dim(&self) -> usize {
        self.atoms.rows()
    }

    /// Σᵢ d(yᵢ, ψ_assign(i)) recomputed from scratch.
    pub fn recompute_distortion(&self, data: &Matrix<T>) -> T {
        data.columns()
            .zip(&self.assignments)
            .map(|(y, &j)| point_distortion(y, self.atoms.col(j)))
            .sum()
    }
}

fn check_unit<T: Scalar>(index: usize, psi: &[T]) -> Result<()> {
    let n = norm(psi);
    if (n - T::one()).abs() > T::lit(1e-6) || !n.is_finite() {
        return Err(Error::NonUnitAtom {
            index,
            norm: n.as_f64(),
        });
    }
    Ok(())
}

fn check_atoms<T: Scalar>(atoms: &Matrix<T>) -> Result<()> {
    if atoms.cols() == 0 {
        return Err(Error::InvalidK("atom set is empty".into()));
    }
    atoms
        .columns()
        .enumerate()
        .try_for_each(|(j, c)| check_unit(j, c))
}

#[inline]
fn point_distortion<T: Scalar>(y: &[T], psi: &[T]) -> T {
    let c = dot(y, psi);
    (norm_sq(y) - c * c).max(T::zero())
}

/// `d(y, ψ) = ‖y − ψ(yᵀψ)‖₂² = ‖y‖² − (yᵀψ)²` for unit `ψ`.
pub fn distortion<T: Scalar>(y: &[T], psi: &[T]) -> Result<T> {
    if y.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            found: y.len(),
        });
    }
    check_unit(0, psi)?;
    Ok(point_distortion(y, psi))
}

/// Index of the atom with the largest |correlation| and that correlation.
/// Ties go to the lowest index; a zero vector picks atom 0 with coefficient 0.
#[inline]
pub(crate) fn correlate_and_max<T: Scalar>(atoms: &Matrix<T>, r: &[T]) -> (usize, T) {
    let mut best = 0;
    let mut best_c = T::zero();
    let mut best_abs = T::neg_infinity();
    for (j, psi) in atoms.columns().enumerate() {
        let c = dot(psi, r);
        if c.abs() > best_abs {
            best = j;
            best_c = c;
            best_abs = c.abs();
        }
    }
    (best, best_c)
}

fn assign_unchecked<T: Scalar>(data: &Matrix<T>, atoms: &Matrix<T>) -> (Vec<usize>, Vec<T>) {
    (0..data.cols())
        .into_par_iter()
        .map(|i| correlate_and_max(atoms, data.col(i)))
        .unzip()
}

/// Assigns every column of `data` to its best atom.
pub fn assign<T: Scalar>(data: &Matrix<T>, atoms: &Matrix<T>) -> Result<(Vec<usize>, Vec<T>)> {
    check_atoms(atoms)?;
    if data.rows() != atoms.rows() {
        return Err(Error::DimensionMismatch {
            expected: atoms.rows(),
            found: data.rows(),
        });
    }
    Ok(assign_unchecked(data, atoms))
}

/// Fits K hyperlines to the columns of `data`.
///
/// Alternates assignment and centroid update until the assignment vector
/// stops changing or `max_outer_iters` is reached. The returned assignment is
/// the plain argmax assignment against the final atoms.
pub fn fit<T: Scalar>(data: &Matrix<T>, cfg: &ClusteringConfig) -> Result<Clustering<T>> {
    cfg.validate()?;
    let nonzero: Vec<usize> = data
        .columns()
        .enumerate()
        .filter(|(_, c)| norm_sq(c) > T::zero())
        .map(|(i, _)| i)
        .collect();
    if data.cols() == 0 {
        return Err(Error::TooFewSamples {
            needed: cfg.k,
            found: 0,
        });
    }
    if nonzero.is_empty() {
        return Err(Error::ZeroData);
    }
    if nonzero.len() < cfg.k {
        return Err(Error::TooFewSamples {
            needed: cfg.k,
            found: nonzero.len(),
        });
    }

    let mut best: Option<Clustering<T>> = None;
    for r in 0..cfg.restarts {
        let seed = if r == 0 { cfg.seed } else { cfg.seed.derive(r as u64) };
        let c = fit_once(data, &nonzero, cfg, seed)?;
        if best.as_ref().is_none_or(|b| c.distortion < b.distortion) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn fit_once<T: Scalar>(
    data: &Matrix<T>,
    nonzero: &[usize],
    cfg: &ClusteringConfig,
    seed: RngSeed,
) -> Result<Clustering<T>> {
    let m = data.rows();
    let t = data.cols();
    let k = cfg.k;
    let mut rng = seed.rng();

    let mut atoms = match cfg.init {
        InitStrategy::RandomSamples => {
            let picks = sample_indices(nonzero.len(), k, &mut rng);
            let cols: Vec<Vec<T>> = picks
                .iter()
                .map(|&p| {
                    let mut v = data.col(nonzero[p]).to_vec();
                    normalize(&mut v);
                    v
                })
                .collect();
            Matrix::from_columns(m, &cols)?
        }
        InitStrategy::RandomUnit => {
            let cols: Vec<Vec<T>> = (0..k).map(|_| random_unit_vector(m, &mut rng)).collect();
            Matrix::from_columns(m, &cols)?
        }
    };
    let energies: Vec<T> = data.columns().map(norm_sq).collect();

    let mut assignments = vec![usize::MAX; t];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_outer_iters {
        let (mut idx, mut coef) = assign_unchecked(data, &atoms);
        if cfg.empty_cluster == EmptyClusterPolicy::ReseedWorst {
            reseed_empty(data, &energies, &mut atoms, &mut idx, &mut coef);
        }
        if idx == assignments {
            converged = true;
            break;
        }
        assignments = idx;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &j) in assignments.iter().enumerate() {
            members[j].push(i);
        }
        let updated: Vec<Result<Option<Vec<T>>>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let energy: T = members[j].iter().map(|&i| energies[i]).sum();
                if energy == T::zero() {
                    return Ok(None);
                }
                let yj = data.select_columns(&members[j]);
                dominant_left_singular_vector(&yj, atoms.col(j), &cfg.power).map(Some)
            })
            .collect();
        for (j, u) in updated.into_iter().enumerate() {
            if let Some(psi) = u? {
                atoms.col_mut(j).copy_from_slice(&psi);
            }
        }

        let total: T = data
            .columns()
            .zip(&assignments)
            .map(|(y, &j)| point_distortion(y, atoms.col(j)))
            .sum();
        history.push(total);
    }

    let (assignments, coefficients) = assign_unchecked(data, &atoms);
    let distortion = data
        .columns()
        .zip(&coefficients)
        .map(|(y, &c)| (norm_sq(y) - c * c).max(T::zero()))
        .sum();
    Ok(Clustering {
        atoms,
        assignments,
        coefficients,
        distortion,
        history,
        converged,
    })
}

/// Reseeds each empty cluster from the worst-fit sample whose own cluster
/// would stay nonempty.
fn reseed_empty<T: Scalar>(
    data: &Matrix<T>,
    energies: &[T],
    atoms: &mut Matrix<T>,
    idx: &mut [usize],
    coef: &mut [T],
) {
    let k = atoms.cols();
    let mut counts = vec![0usize; k];
    for &j in idx.iter() {
        counts[j] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut worst: Option<(usize, T)> = None;
        for i in 0..idx.len() {
            if counts[idx[i]] < 2 {
                continue;
            }
            let d = energies[i] - coef[i] * coef[i];
            if d > T::zero() && worst.is_none_or(|(_, w)| d > w) {
                worst = Some((i, d));
            }
        }
        let Some((i, _)) = worst else { break };
        let mut psi = data.col(i).to_vec();
        normalize(&mut psi);
        atoms.col_mut(j).copy_from_slice(&psi);
        counts[idx[i]] -= 1;
        counts[j] = 1;
        idx[i] = j;
        coef[i] = dot(data.col(i), &psi);
    }
}

fn check_pair<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::SizeMismatch {
            left: a.cols(),
            right: b.cols(),
        });
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    check_atoms(a)?;
    check_atoms(b)
}

/// Distance between two sets of centroids:
/// `max_j min_l d(ψ_j, λ_l)^½ + max_j min_l d(λ_j, ψ_l)^½`.
///
/// Symmetric, and zero exactly when every atom of each set lies on a
/// hyperline of the other (equal up to permutation and sign for sets of
/// distinct lines).
pub fn centroid_distance<T: Scalar>(psi: &Matrix<T>, lambda: &Matrix<T>) -> Result<T> {
    check_pair(psi, lambda)?;
    Ok(directed_distance(psi, lambda) + directed_distance(lambda, psi))
}

fn directed_distance<T: Scalar>(from: &Matrix<T>, to: &Matrix<T>) -> T {
    from.columns()
        .map(|a| {
            to.columns()
                .map(|b| line_gap(a, b))
                .fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max)
}

/// `‖a − b(aᵀb)‖₂`, the square root of the distortion, evaluated on the
/// residual vector so nearly collinear atoms give tiny rather than `√ε` values.
fn line_gap<T: Scalar>(a: &[T], b: &[T]) -> T {
    let c = dot(a, b);
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let r = x - y * c;
            r * r
        })
        .sum::<T>()
        .sqrt()
}

/// Monte-Carlo estimate of `∫ |g_Ψ(y) − g_Λ(y)| dP(y)` over the columns of
/// `samples`, where `g_Ψ(y) = min_j d(y, ψ_j)`.
pub fn empirical_l1_distance<T: Scalar>(
    psi: &Matrix<T>,
    lambda: &Matrix<T>,
    samples: &Matrix<T>,
) -> Result<T> {
    if samples.cols() == 0 {
        return Err(Error::EmptySamples);
    }
    check_atoms(psi)?;
    check_atoms(lambda)?;
    for atoms in [psi, lambda] {
        if atoms.rows() != samples.rows() {
            return Err(Error::DimensionMismatch {
                expected: atoms.rows(),
                found: samples.rows(),
            });
        }
    }
    let g = |atoms: &Matrix<T>, y: &[T]| {
        let (_, c) = correlate_and_max(atoms, y);
        (norm_sq(y) - c * c).max(T::zero())
    };
    let total: T = samples
        .columns()
        .map(|y| (g(psi, y) - g(lambda, y)).abs())
        .sum();
    Ok(total / T::from_usize_lossy(samples.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cols(m: usize, v: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_columns(m, v).unwrap()
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(distortion(&[0.0, 2.0], &[1.0, 0.0]).unwrap(), 4.0);
        assert_eq!(distortion(&[3.0, 4.0], &[1.0, 0.0]).unwrap(), 16.0);
        assert!(matches!(
            distortion(&[3.0, 4.0], &[1.0, 1.0]),
            Err(Error::NonUnitAtom { .. })
        ));
    }

    #[test]
    fn assign_examples() {
        let atoms = Matrix::<f64>::identity(2);
        let (i, c) = assign(&cols(2, &[vec![1.0, 0.0]]), &atoms).unwrap();
        assert_eq!((i[0], c[0]), (0, 1.0));
        let (i, c) = assign(&cols(2, &[vec![0.0, -2.0]]), &atoms).unwrap();
        assert_eq!((i[0], c[0]), (1, -2.0));
        let h = 1.0 / 2f64.sqrt();
        let (i, c) = assign(&cols(2, &[vec![h, h]]), &atoms).unwrap();
        assert_eq!((i[0], c[0]), (0, h));
        assert!(assign(&cols(2, &[vec![1.0, 0.0]]), &atoms.scaled(2.0)).is_err());
    }

    #[test]
    fn fit_two_axes() {
        let mut v = Vec::new();
        for _ in 0..10 {
            v.push(vec![1.0, 0.0]);
            v.push(vec![0.0, 1.0]);
        }
        let data = cols(2, &v);
        for seed in 0..10 {
            let c = fit(&data, &ClusteringConfig::new(2).with_seed(seed)).unwrap();
            assert_eq!(c.distortion, 0.0);
            let mut found = [false; 2];
            for a in c.atoms.columns() {
                for axis in 0..2 {
                    if (a[axis].abs() - 1.0).abs() < 1e-12 {
                        found[axis] = true;
                    }
                }
            }
            assert_eq!(found, [true, true], "seed {seed}");
        }
    }

    #[test]
    fn fit_negative_multiples_share_a_line() {
        let data = cols(2, &[vec![1.0, 0.0], vec![2.0, 0.0], vec![-3.0, 0.0]]);
        let c = fit(&data, &ClusteringConfig::new(1)).unwrap();
        assert_eq!(c.distortion, 0.0);
        assert!((c.atoms[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(c.coefficients[2], -3.0 * c.atoms[(0, 0)]);
    }

    #[test]
    fn fit_errors() {
        let z = Matrix::<f64>::zeros(3, 5);
        assert!(matches!(fit(&z, &ClusteringConfig::new(2)), Err(Error::ZeroData)));
        let d = cols(2, &[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(
            fit(&d, &ClusteringConfig::new(2)),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(fit(&d, &ClusteringConfig::new(0)), Err(Error::InvalidK(_))));
    }

    #[test]
    fn random_unit_init_also_converges() {
        let data = cols(2, &[vec![1.0, 0.1], vec![2.0, 0.0], vec![0.0, 1.0], vec![0.1, -3.0]]);
        let mut cfg = ClusteringConfig::new(2).with_seed(5);
        cfg.init = InitStrategy::RandomUnit;
        let c = fit(&data, &cfg).unwrap();
        assert!(c.converged);
        assert!((c.recompute_distortion(&data) - c.distortion).abs() < 1e-12);
    }

    #[test]
    fn centroid_distance_examples() {
        let psi = Matrix::<f64>::identity(2);
        assert_eq!(centroid_distance(&psi, &psi).unwrap(), 0.0);
        assert_eq!(centroid_distance(&psi, &psi.scaled(-1.0)).unwrap(), 0.0);
        assert!(matches!(
            centroid_distance(&psi, &Matrix::from_columns(2, &[vec![1.0, 0.0]]).unwrap()),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn centroid_distance_rotated_atom() {
        // exhaustive oracle written with angles: d(a, b)^½ = |sin ∠(a, b)|
        let th = 10f64.to_radians();
        let psi_ang = [0.0, std::f64::consts::FRAC_PI_2];
        let lam_ang = [th, std::f64::consts::FRAC_PI_2];
        let directed = |a: &[f64], b: &[f64]| {
            a.iter()
                .map(|x| b.iter().map(|y| (x - y).sin().abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let expected = directed(&psi_ang, &lam_ang) + directed(&lam_ang, &psi_ang);
        let to_m = |angles: &[f64]| {
            cols(2, &angles.iter().map(|a| vec![a.cos(), a.sin()]).collect::<Vec<_>>())
        };
        let got = centroid_distance(&to_m(&psi_ang), &to_m(&lam_ang)).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 2.0 * th.sin()).abs() < 1e-12);
    }

    #[test]
    fn l1_distance_examples() {
        let e1 = cols(2, &[vec![1.0, 0.0]]);
        let e2 = cols(2, &[vec![0.0, 1.0]]);
        let samples = cols(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(empirical_l1_distance(&e1, &e1, &samples).unwrap(), 0.0);
        assert_eq!(empirical_l1_distance(&e1, &e1.scaled(-1.0), &samples).unwrap(), 0.0);
        assert_eq!(empirical_l1_distance(&e1, &e2, &samples).unwrap(), 1.0);
        assert!(matches!(
            empirical_l1_distance(&e1, &e2, &Matrix::zeros(2, 0)),
            Err(Error::EmptySamples)
        ));
    }

    proptest! {
        #[test]
        fn assign_is_scale_direction_invariant(
            y in prop::collection::vec(-10.0f64..10.0, 4),
            c in prop::sample::select(vec![-7.5, -1.0, -0.01, 0.3, 2.0, 100.0]),
            seed in 0u64..1000,
        ) {
            prop_assume!(norm(&y) > 1e-3);
            let mut rng = RngSeed(seed).rng();
            let atoms: Vec<Vec<f64>> = (0..5).map(|_| random_unit_vector(4, &mut rng)).collect();
            let atoms = Matrix::from_columns(4, &atoms).unwrap();
            let (i1, c1) = assign(&Matrix::from_columns(4, std::slice::from_ref(&y)).unwrap(), &atoms).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let (i2, c2) = assign(&Matrix::from_columns(4, &[ys]).unwrap(), &atoms).unwrap();
            prop_assert_eq!(i1[0], i2[0]);
            prop_assert!((c2[0] - c * c1[0]).abs() <= 1e-9 * (1.0 + c2[0].abs()));
        }

        #[test]
        fn centroid_distance_symmetric_and_zero_on_relabel(seed in 0u64..500) {
            let mut rng = RngSeed(seed).rng();
            let a: Vec<Vec<f64>> = (0..4).map(|_| random_unit_vector(5, &mut rng)).collect();
            let b: Vec<Vec<f64>> = (0..4).map(|_| random_unit_vector(5, &mut rng)).collect();
            let ma = Matrix::from_columns(5, &a).unwrap();
            let mb = Matrix::from_columns(5, &b).unwrap();
            let ab = centroid_distance(&ma, &mb).unwrap();
            let ba = centroid_distance(&mb, &ma).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab > 1e-6);
            let perm: Vec<Vec<f64>> = [2usize, 0, 3, 1].iter().enumerate()
                .map(|(n, &j)| a[j].iter().map(|v| if n % 2 == 0 { -v } else { *v }).collect())
                .collect();
            let mp = Matrix::from_columns(5, &perm).unwrap();
            prop_assert!(centroid_distance(&ma, &mp).unwrap() < 1e-12);
        }
    }
}
