//! Multilevel dictionary learning.
//!
//! Level `l` clusters the residuals of level `l − 1` into `K_l` hyperlines;
//! each sample then carries one (atom, coefficient) pair per level and
//! passes its new residual down. Samples whose residual energy falls to the
//! error goal or below drop out of later levels.

mod mdl;
mod robust;

pub use mdl::{estimate_level_sizes, mdl_score, model_cost, MdlConfig, MdlEstimate, MdlScore};
pub use robust::{train_robust, RobustMultilevelDictionary, RobustParams, RobustTrainOutput};

use log::warn;

use crate::error::{Error, Result};
use crate::khyperline::{fit, Clustering, ClusteringConfig};
use crate::numerics::{norm, norm_sq, Matrix};
use crate::scalar::Scalar;

/// Ordered stack of sub-dictionaries, each a matrix of unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelDictionary<T> {
    levels: Vec<Matrix<T>>,
    error_goal: T,
}

impl<T: Scalar> MultilevelDictionary<T> {
    pub fn new(levels: Vec<Matrix<T>>, error_goal: T) -> Result<Self> {
        validate_levels(&levels)?;
        if error_goal < T::zero() {
            return Err(Error::InvalidArgument("error goal must be >= 0".into()));
        }
        Ok(Self { levels, error_goal })
    }

    pub fn levels(&self) -> &[Matrix<T>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Matrix<T> {
        &self.levels[l]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Ambient dimension M.
    pub fn dim(&self) -> usize {
        self.levels[0].rows()
    }

    pub fn per_level_k(&self) -> Vec<usize> {
        self.levels.iter().map(Matrix::cols).collect()
    }

    pub fn total_atoms(&self) -> usize {
        self.levels.iter().map(Matrix::cols).sum()
    }

    pub fn error_goal(&self) -> T {
        self.error_goal
    }
}

pub(crate) fn validate_levels<T: Scalar>(levels: &[Matrix<T>]) -> Result<()> {
    let Some(first) = levels.first() else {
        return Err(Error::InvalidArgument("dictionary needs at least one level".into()));
    };
    let m = first.rows();
    for (l, level) in levels.iter().enumerate() {
        if level.rows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: level.rows(),
            });
        }
        if level.cols() == 0 {
            return Err(Error::InvalidK(format!("level {l} has no atoms")));
        }
        for (j, atom) in level.columns().enumerate() {
            let n = norm(atom);
            if (n - T::one()).abs() > T::lit(1e-6) {
                return Err(Error::NonUnitAtom {
                    index: j,
                    norm: n.as_f64(),
                });
            }
        }
    }
    Ok(())
}

/// One level's codes for every training sample. Samples that were inactive
/// at that level hold index 0 and coefficient 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCodes<T> {
    pub indices: Vec<usize>,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> LevelCodes<T> {
    fn zeros(t: usize) -> Self {
        Self {
            indices: vec![0; t],
            coefficients: vec![T::zero(); t],
        }
    }
}

/// Per-level energy bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace<T> {
    pub k: usize,
    pub active_samples: usize,
    /// ‖R_{l−1}‖_F²
    pub input_energy: T,
    /// ‖Ψ_l A_l‖_F²
    pub represented_energy: T,
    /// ‖R_l‖_F²
    pub residual_energy: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace<T> {
    pub levels: Vec<LevelTrace<T>>,
}

impl<T: Scalar> TrainingTrace<T> {
    pub fn residual_energies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.residual_energy).collect()
    }

    pub fn represented_energies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.represented_energy).collect()
    }
}

/// Sizes and stopping rule for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    /// Atoms per level; a single entry is used for every level.
    pub per_level_k: Vec<usize>,
    pub max_levels: usize,
    /// Samples with residual energy ‖r‖² ≤ this stop participating.
    pub error_goal: f64,
}

impl TrainParams {
    pub fn new(k: usize, max_levels: usize) -> Self {
        Self {
            per_level_k: vec![k],
            max_levels,
            error_goal: 0.0,
        }
    }

    pub(crate) fn k_at(&self, level: usize) -> usize {
        if self.per_level_k.len() == 1 {
            self.per_level_k[0]
        } else {
            self.per_level_k[level]
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_levels == 0 {
            return Err(Error::InvalidArgument("max_levels must be >= 1".into()));
        }
        if self.per_level_k.len() != 1 && self.per_level_k.len() < self.max_levels {
            return Err(Error::InvalidK(format!(
                "{} per-level sizes given for {} levels",
                self.per_level_k.len(),
                self.max_levels
            )));
        }
        if self.per_level_k.is_empty() || self.per_level_k.contains(&0) {
            return Err(Error::InvalidK("every level needs K >= 1".into()));
        }
        if !(self.error_goal >= 0.0) {
            return Err(Error::InvalidArgument("error goal must be >= 0".into()));
        }
        Ok(())
    }
}

/// Dictionary plus the training set's codes and final residuals.
#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub dictionary: MultilevelDictionary<T>,
    pub codes: Vec<LevelCodes<T>>,
    /// R_L, one column per training sample.
    pub residual: Matrix<T>,
    pub trace: TrainingTrace<T>,
}

impl<T: Scalar> TrainOutput<T> {
    /// Coefficients stacked over levels: a (ΣK_l) × T matrix with one nonzero
    /// per level block in each column.
    pub fn coefficient_matrix(&self) -> Matrix<T> {
        stack_codes(&self.dictionary.per_level_k(), &self.codes)
    }
}

pub(crate) fn stack_codes<T: Scalar>(per_level_k: &[usize], codes: &[LevelCodes<T>]) -> Matrix<T> {
    let rows: usize = per_level_k.iter().sum();
    let t = codes.first().map_or(0, |c| c.indices.len());
    let mut a = Matrix::zeros(rows, t);
    let mut offset = 0;
    for (k, level) in per_level_k.iter().zip(codes) {
        for i in 0..t {
            a[(offset + level.indices[i], i)] += level.coefficients[i];
        }
        offset += k;
    }
    a
}

/// Indices of columns with ‖r‖² > ε.
pub(crate) fn active_set<T: Scalar>(r: &Matrix<T>, error_goal: T) -> Vec<usize> {
    r.columns()
        .enumerate()
        .filter(|(_, c)| norm_sq(c) > error_goal)
        .map(|(i, _)| i)
        .collect()
}

/// Level seed shared by every learner so equal configurations agree.
pub(crate) fn level_config(cfg: &ClusteringConfig, level: usize, k: usize) -> ClusteringConfig {
    cfg.clone().with_k(k).with_seed(cfg.seed.derive(level as u64))
}

pub(crate) fn clamp_k(requested: usize, available: usize, level: usize) -> usize {
    if requested > available {
        warn!("level {level}: K = {requested} exceeds {available} active samples, clamping");
        available
    } else {
        requested
    }
}

/// Drives the level recursion; `learn_level(l, R̂_{l−1})` returns the
/// clustering for level `l`.
pub(crate) fn run_levels<T, F>(
    data: &Matrix<T>,
    max_levels: usize,
    error_goal: T,
    mut learn_level: F,
) -> Result<TrainOutput<T>>
where
    T: Scalar,
    F: FnMut(usize, &Matrix<T>) -> Result<Clustering<T>>,
{
    if data.cols() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let t = data.cols();
    let mut residual = data.clone();
    let mut active = active_set(&residual, error_goal);
    let mut levels = Vec::new();
    let mut codes = Vec::new();
    let mut trace = TrainingTrace::default();

    for l in 0..max_levels {
        if active.is_empty() {
            break;
        }
        let input_energy = residual.frobenius_norm_sq();
        let sub = residual.select_columns(&active);
        let clustering = learn_level(l, &sub)?;

        let mut level_codes = LevelCodes::zeros(t);
        let mut represented = T::zero();
        for (jj, &i) in active.iter().enumerate() {
            let j = clustering.assignments[jj];
            let c = clustering.coefficients[jj];
            let atom = clustering.atoms.col(j);
            let r = residual.col_mut(i);
            let mut approx_sq = T::zero();
            for (rk, &ak) in r.iter_mut().zip(atom) {
                let v = ak * c;
                *rk -= v;
                approx_sq += v * v;
            }
            represented += approx_sq;
            level_codes.indices[i] = j;
            level_codes.coefficients[i] = c;
        }
        trace.levels.push(LevelTrace {
            k: clustering.k(),
            active_samples: active.len(),
            input_energy,
            represented_energy: represented,
            residual_energy: residual.frobenius_norm_sq(),
        });
        levels.push(clustering.atoms);
        codes.push(level_codes);
        active = active_set(&residual, error_goal);
    }

    Ok(TrainOutput {
        dictionary: MultilevelDictionary::new(levels, error_goal)?,
        codes,
        residual,
        trace,
    })
}

/// Learns a multilevel dictionary from the columns of `data`.
///
/// Stops after `max_levels` levels or once no sample has residual energy
/// above the error goal. A level whose K exceeds the number of active samples
/// is clamped to that number.
pub fn train<T: Scalar>(
    data: &Matrix<T>,
    params: &TrainParams,
    cfg: &ClusteringConfig,
) -> Result<TrainOutput<T>> {
    params.validate()?;
    run_levels(data, params.max_levels, T::lit(params.error_goal), |l, sub| {
        let k = clamp_k(params.k_at(l), sub.cols(), l);
        fit(sub, &level_config(cfg, l, k))
    })
}
