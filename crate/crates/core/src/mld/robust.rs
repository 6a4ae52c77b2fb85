//! Robust (ensemble) multilevel dictionaries.
//!
//! Each level learns D sub-dictionaries, each on its own random subset of
//! the level's training residuals. Every sample is approximated by the mean
//! of its D one-sparse approximations and the recursion continues on the
//! residual of that mean.

use rayon::prelude::*;

use super::{
    active_set, clamp_k, level_config, validate_levels, LevelCodes, LevelTrace, TrainParams,
    TrainingTrace,
};
use crate::error::{Error, Result};
use crate::khyperline::{correlate_and_max, fit, Clustering, ClusteringConfig};
use crate::numerics::{sample_indices, Matrix};
use crate::scalar::Scalar;

/// Sub-dictionary ensembles, `levels[l][d]` being round `d` of level `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustMultilevelDictionary<T> {
    levels: Vec<Vec<Matrix<T>>>,
    subset_size: usize,
    error_goal: T,
}

impl<T: Scalar> RobustMultilevelDictionary<T> {
    pub fn new(levels: Vec<Vec<Matrix<T>>>, subset_size: usize, error_goal: T) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::InvalidArgument("dictionary needs at least one level".into()));
        };
        let rounds = first.len();
        if rounds == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one round".into()));
        }
        let m = first[0].rows();
        for ensemble in &levels {
            if ensemble.len() != rounds {
                return Err(Error::ShapeMismatch(format!(
                    "levels hold {} and {} rounds",
                    rounds,
                    ensemble.len()
                )));
            }
            validate_levels(ensemble)?;
            let k = ensemble[0].cols();
            if ensemble.iter().any(|d| d.cols() != k || d.rows() != m) {
                return Err(Error::ShapeMismatch(
                    "sub-dictionaries of a level must share K and M".into(),
                ));
            }
        }
        Ok(Self {
            levels,
            subset_size,
            error_goal,
        })
    }

    pub fn levels(&self) -> &[Vec<Matrix<T>>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &[Matrix<T>] {
        &self.levels[l]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn rounds(&self) -> usize {
        self.levels[0].len()
    }

    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    pub fn dim(&self) -> usize {
        self.levels[0][0].rows()
    }

    pub fn per_level_k(&self) -> Vec<usize> {
        self.levels.iter().map(|e| e[0].cols()).collect()
    }

    pub fn error_goal(&self) -> T {
        self.error_goal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustParams {
    pub levels: TrainParams,
    /// D, the number of sub-dictionaries per level.
    pub rounds: usize,
    /// T_D, samples drawn (without replacement) for each sub-dictionary.
    pub subset_size: usize,
}

#[derive(Debug, Clone)]
pub struct RobustTrainOutput<T> {
    pub dictionary: RobustMultilevelDictionary<T>,
    /// `codes[l][d]`: codes of every training sample against round `d` of level `l`.
    pub codes: Vec<Vec<LevelCodes<T>>>,
    pub residual: Matrix<T>,
    pub trace: TrainingTrace<T>,
}

impl<T: Scalar> RobustTrainOutput<T> {
    /// Ensemble coefficients stacked as (level, round, atom) rows, each scaled
    /// by 1/D so that the stacked code synthesizes the averaged approximation.
    pub fn coefficient_matrix(&self) -> Matrix<T> {
        let d = self.dictionary.rounds();
        let inv_d = T::one() / T::from_usize_lossy(d);
        let k: Vec<usize> = self
            .dictionary
            .per_level_k()
            .iter()
            .flat_map(|&k| std::iter::repeat_n(k, d))
            .collect();
        let codes: Vec<LevelCodes<T>> = self
            .codes
            .iter()
            .flatten()
            .map(|c| LevelCodes {
                indices: c.indices.clone(),
                coefficients: c.coefficients.iter().map(|&v| v * inv_d).collect(),
            })
            .collect();
        super::stack_codes(&k, &codes)
    }
}

/// Subset-sampling stream, kept apart from the clustering seeds.
const SUBSET_STREAM: u64 = 0x005E_B5E7;

/// Learns a robust multilevel dictionary.
///
/// With one round and `subset_size` equal to the number of samples this
/// reproduces [`super::train`] exactly for the same clustering seed.
pub fn train_robust<T: Scalar>(
    data: &Matrix<T>,
    params: &RobustParams,
    cfg: &ClusteringConfig,
) -> Result<RobustTrainOutput<T>> {
    params.levels.validate()?;
    let t = data.cols();
    if t == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if params.rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be >= 1".into()));
    }
    if params.subset_size == 0 {
        return Err(Error::InvalidArgument("subset size must be >= 1".into()));
    }
    if params.subset_size > t {
        return Err(Error::SubsetTooLarge {
            subset: params.subset_size,
            total: t,
        });
    }
    let error_goal = T::lit(params.levels.error_goal);
    let d = params.rounds;
    let inv_d = T::one() / T::from_usize_lossy(d);

    let mut residual = data.clone();
    let mut active = active_set(&residual, error_goal);
    let mut levels = Vec::new();
    let mut codes = Vec::new();
    let mut trace = TrainingTrace::default();

    for l in 0..params.levels.max_levels {
        if active.is_empty() {
            break;
        }
        let input_energy = residual.frobenius_norm_sq();
        let sub = residual.select_columns(&active);
        let subset_size = params.subset_size.min(sub.cols());
        let k = clamp_k(params.levels.k_at(l), subset_size, l);
        let base = level_config(cfg, l, k);

        let mut subset_rng = base.seed.derive(SUBSET_STREAM).rng();
        let subsets: Vec<Vec<usize>> = (0..d)
            .map(|_| sample_indices(sub.cols(), subset_size, &mut subset_rng))
            .collect();
        let fits: Vec<Result<Clustering<T>>> = subsets
            .par_iter()
            .enumerate()
            .map(|(round, subset)| {
                let mut round_cfg = base.clone();
                if round > 0 {
                    round_cfg.seed = base.seed.derive(round as u64);
                }
                fit(&sub.select_columns(subset), &round_cfg)
            })
            .collect();
        let ensemble: Vec<Matrix<T>> = fits
            .into_iter()
            .map(|f| f.map(|c| c.atoms))
            .collect::<Result<_>>()?;

        let mut level_codes: Vec<LevelCodes<T>> = (0..d).map(|_| LevelCodes::zeros(t)).collect();
        let mut represented = T::zero();
        let mut acc = vec![T::zero(); data.rows()];
        for &i in &active {
            acc.iter_mut().for_each(|v| *v = T::zero());
            let r = residual.col(i);
            for (round, atoms) in ensemble.iter().enumerate() {
                let (j, c) = correlate_and_max(atoms, r);
                for (a, &v) in acc.iter_mut().zip(atoms.col(j)) {
                    *a += v * c;
                }
                level_codes[round].indices[i] = j;
                level_codes[round].coefficients[i] = c;
            }
            let r = residual.col_mut(i);
            let mut approx_sq = T::zero();
            for (rk, &ak) in r.iter_mut().zip(&acc) {
                let v = ak * inv_d;
                *rk -= v;
                approx_sq += v * v;
            }
            represented += approx_sq;
        }

        trace.levels.push(LevelTrace {
            k,
            active_samples: active.len(),
            input_energy,
            represented_energy: represented,
            residual_energy: residual.frobenius_norm_sq(),
        });
        levels.push(ensemble);
        codes.push(level_codes);
        active = active_set(&residual, error_goal);
    }

    Ok(RobustTrainOutput {
        dictionary: RobustMultilevelDictionary::new(levels, params.subset_size, error_goal)?,
        codes,
        residual,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::super::train;
    use super::*;
    use crate::numerics::{random_unit_vector, standard_normal, RngSeed};

    fn gaussian(m: usize, t: usize, seed: u64) -> Matrix<f64> {
        let mut rng = RngSeed(seed).rng();
        Matrix::from_col_major(m, t, (0..m * t).map(|_| standard_normal(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn single_round_full_subset_matches_mld_bitwise() {
        let data = gaussian(6, 50, 1);
        let cfg = ClusteringConfig::new(1).with_seed(12);
        let levels = TrainParams::new(4, 4);
        let mld = train(&data, &levels, &cfg).unwrap();
        let rmld = train_robust(
            &data,
            &RobustParams { levels: levels.clone(), rounds: 1, subset_size: 50 },
            &cfg,
        )
        .unwrap();
        assert_eq!(mld.residual.as_slice(), rmld.residual.as_slice());
        for (a, b) in mld.dictionary.levels().iter().zip(rmld.dictionary.levels()) {
            assert_eq!(a, &b[0]);
        }
        for (a, b) in mld.trace.levels.iter().zip(&rmld.trace.levels) {
            assert_eq!(a.residual_energy.to_bits(), b.residual_energy.to_bits());
        }
    }

    #[test]
    fn one_line_every_round_finds_it() {
        let mut rng = RngSeed(2).rng();
        let line: Vec<f64> = random_unit_vector(5, &mut rng);
        let cols: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let c: f64 = standard_normal(&mut rng);
                line.iter().map(|v| c * v).collect()
            })
            .collect();
        let data = Matrix::from_columns(5, &cols).unwrap();
        let out = train_robust(
            &data,
            &RobustParams { levels: TrainParams::new(2, 1), rounds: 4, subset_size: 10 },
            &ClusteringConfig::new(1),
        )
        .unwrap();
        for sub in out.dictionary.level(0) {
            let best = sub
                .columns()
                .map(|a| crate::numerics::dot(a, &line).abs())
                .fold(0.0, f64::max);
            assert!((best - 1.0).abs() < 1e-10);
        }
        assert!(out.residual.frobenius_norm_sq() < 1e-20 * data.frobenius_norm_sq());
    }

    #[test]
    fn subset_too_large() {
        let data = gaussian(3, 10, 0);
        let r = train_robust(
            &data,
            &RobustParams { levels: TrainParams::new(2, 1), rounds: 2, subset_size: 11 },
            &ClusteringConfig::new(1),
        );
        assert!(matches!(r, Err(Error::SubsetTooLarge { .. })));
    }

    #[test]
    fn residual_energy_decreases() {
        let data = gaussian(8, 200, 5);
        let out = train_robust(
            &data,
            &RobustParams { levels: TrainParams::new(4, 6), rounds: 5, subset_size: 60 },
            &ClusteringConfig::new(1).with_seed(3),
        )
        .unwrap();
        let e = out.trace.residual_energies();
        assert!(e[0] < data.frobenius_norm_sq());
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
        assert_eq!(out.dictionary.rounds(), 5);
        assert_eq!(out.coefficient_matrix().rows(), 6 * 5 * 4);
    }
}
