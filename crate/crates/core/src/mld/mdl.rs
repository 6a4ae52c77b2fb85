//! Minimum-description-length choice of the number of atoms per level.
//!
//! Residuals at level `l` are modeled as white Gaussian with variance
//! `σ_l² = (1 − α)^l E / (M T)`, where `E` is the energy of the training
//! data and `α` the fraction of energy each level is expected to capture.
//! A level's score adds the Gaussian code length of the fit error to the
//! cost of coding the coefficients, their locations and the atoms.

use rayon::prelude::*;

use super::{level_config, run_levels, LevelCodes, TrainOutput};
use crate::error::{Error, Result};
use crate::khyperline::{fit, Clustering, ClusteringConfig};
use crate::numerics::{dist_sq, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MdlConfig {
    /// Fraction of the remaining energy each level is assumed to represent.
    pub alpha: f64,
    pub candidate_k: Vec<usize>,
    pub max_levels: usize,
    pub error_goal: f64,
    /// Minimum number of clustering restarts per candidate. A candidate
    /// stuck in a poor local minimum would otherwise look overpriced.
    pub restarts: usize,
}

impl Default for MdlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            candidate_k: (1..=8).collect(),
            max_levels: 4,
            error_goal: 0.0,
            restarts: 8,
        }
    }
}

impl MdlConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.candidate_k.is_empty() || self.candidate_k.contains(&0) {
            return Err(Error::InvalidK("candidate list must be nonempty and >= 1".into()));
        }
        if self.max_levels == 0 {
            return Err(Error::InvalidArgument("max_levels must be >= 1".into()));
        }
        if !(self.error_goal >= 0.0) {
            return Err(Error::InvalidArgument("error goal must be >= 0".into()));
        }
        Ok(())
    }
}

/// The four terms of a level's description length, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdlScore<T> {
    /// `Σ‖r − Ψa‖² / (2σ²)`
    pub data: T,
    /// `(T/2)·log(MT)`
    pub coefficients: T,
    /// `T·log(T·K)`
    pub locations: T,
    /// `(K·M/2)·log(MT)`
    pub atoms: T,
}

impl<T: Scalar> MdlScore<T> {
    pub fn total(&self) -> T {
        self.data + self.coefficients + self.locations + self.atoms
    }

    pub fn model_cost(&self) -> T {
        self.coefficients + self.locations + self.atoms
    }

    /// Total converted to logarithm base `base` (e.g. 2 for bits). Every term,
    /// the Gaussian code length included, is converted, so the ranking of
    /// candidates does not depend on the base.
    pub fn total_in_base(&self, base: f64) -> T {
        self.total() / T::lit(base.ln())
    }
}

/// Model-cost terms for `t` samples in `m` dimensions with `k` atoms:
/// `(coefficients, locations, atoms)`.
pub fn model_cost<T: Scalar>(t: usize, m: usize, k: usize) -> (T, T, T) {
    let t_ = T::from_usize_lossy(t);
    let m_ = T::from_usize_lossy(m);
    let k_ = T::from_usize_lossy(k);
    let half = T::lit(0.5);
    let log_mt = (m_ * t_).ln();
    (half * t_ * log_mt, t_ * (t_ * k_).ln(), half * k_ * m_ * log_mt)
}

/// Description length of `r_prev` coded by a 1-sparse level (`atoms`,
/// `codes`) under noise variance `sigma2`. `T` is the number of columns of
/// `r_prev`, `K` the number of atoms.
pub fn mdl_score<T: Scalar>(
    r_prev: &Matrix<T>,
    atoms: &Matrix<T>,
    codes: &LevelCodes<T>,
    sigma2: T,
) -> Result<MdlScore<T>> {
    if !(sigma2 > T::zero()) {
        return Err(Error::InvalidVariance(sigma2.as_f64()));
    }
    if r_prev.rows() != atoms.rows() {
        return Err(Error::DimensionMismatch {
            expected: atoms.rows(),
            found: r_prev.rows(),
        });
    }
    let t = r_prev.cols();
    if codes.indices.len() != t || codes.coefficients.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: codes.indices.len(),
        });
    }
    let mut fit_error = T::zero();
    let mut approx = vec![T::zero(); atoms.rows()];
    for (i, r) in r_prev.columns().enumerate() {
        let j = codes.indices[i];
        if j >= atoms.cols() {
            return Err(Error::DictMismatch(format!("atom index {j} out of range")));
        }
        let c = codes.coefficients[i];
        for (a, &v) in approx.iter_mut().zip(atoms.col(j)) {
            *a = v * c;
        }
        fit_error += dist_sq(r, &approx);
    }
    let (coefficients, locations, atoms_cost) = model_cost(t, r_prev.rows(), atoms.cols());
    Ok(MdlScore {
        data: fit_error / (T::lit(2.0) * sigma2),
        coefficients,
        locations,
        atoms: atoms_cost,
    })
}

/// Result of [`estimate_level_sizes`].
#[derive(Debug, Clone)]
pub struct MdlEstimate<T> {
    pub selected_k: Vec<usize>,
    /// Per level, `(K, score)` for every candidate that was fit.
    pub scores: Vec<Vec<(usize, MdlScore<T>)>>,
    pub output: TrainOutput<T>,
}

type Candidate<T> = (usize, Clustering<T>, MdlScore<T>);

/// Learns a multilevel dictionary, picking at each level the candidate K
/// with the least description length.
///
/// Candidates larger than the number of active samples at a level are
/// skipped; ties go to the smaller K.
pub fn estimate_level_sizes<T: Scalar>(
    data: &Matrix<T>,
    cfg: &MdlConfig,
    clus_cfg: &ClusteringConfig,
) -> Result<MdlEstimate<T>> {
    cfg.validate()?;
    if data.cols() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let m = data.rows();
    let t_total = data.cols();
    let energy = data.frobenius_norm_sq();
    if energy == T::zero() {
        return Err(Error::ZeroData);
    }
    let error_goal = T::lit(cfg.error_goal);
    let alpha = T::lit(cfg.alpha);
    let mut selected = Vec::new();
    let mut scores = Vec::new();

    let output = run_levels(data, cfg.max_levels, error_goal, |l, sub| {
        let sigma2 = (T::one() - alpha).powi(l as i32 + 1) * energy
            / T::from_usize_lossy(m * t_total);
        let mut candidates: Vec<usize> = cfg
            .candidate_k
            .iter()
            .copied()
            .filter(|&k| k <= sub.cols())
            .collect();
        if candidates.is_empty() {
            candidates.push(sub.cols());
        }
        candidates.sort_unstable();
        candidates.dedup();

        let fits: Vec<Result<Candidate<T>>> = candidates
            .par_iter()
            .map(|&k| {
                let mut kc = level_config(clus_cfg, l, k);
                kc.restarts = kc.restarts.max(cfg.restarts);
                let c = fit(sub, &kc)?;
                let codes = LevelCodes {
                    indices: c.assignments.clone(),
                    coefficients: c.coefficients.clone(),
                };
                let s = mdl_score(sub, &c.atoms, &codes, sigma2)?;
                Ok((k, c, s))
            })
            .collect();

        let mut best: Option<(usize, Clustering<T>, T)> = None;
        let mut level_scores = Vec::with_capacity(fits.len());
        for f in fits {
            let (k, c, s) = f?;
            level_scores.push((k, s));
            let total = s.total();
            if best.as_ref().is_none_or(|(_, _, b)| total < *b) {
                best = Some((k, c, total));
            }
        }
        let (k, clustering, _) = best.expect("at least one candidate");
        selected.push(k);
        scores.push(level_scores);
        Ok(clustering)
    })?;

    Ok(MdlEstimate {
        selected_k: selected,
        scores,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_unit_vector, standard_normal, RngSeed};

    #[test]
    fn perfect_fit_reduces_to_model_cost() {
        // T = 10, M = 4, K = 2: data lie exactly on the two atoms
        let atoms = Matrix::<f64>::from_columns(4, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let mut cols = Vec::new();
        let mut codes = LevelCodes { indices: vec![], coefficients: vec![] };
        for i in 0..10 {
            let j = i % 2;
            let c = (i + 1) as f64;
            let mut v = vec![0.0; 4];
            v[j] = c;
            cols.push(v);
            codes.indices.push(j);
            codes.coefficients.push(c);
        }
        let r = Matrix::from_columns(4, &cols).unwrap();
        let s = mdl_score(&r, &atoms, &codes, 0.3).unwrap();
        let expected = 5.0 * 40f64.ln() + 10.0 * 20f64.ln() + 4.0 * 40f64.ln();
        assert_eq!(s.data, 0.0);
        assert!((s.total() - expected).abs() < 1e-12);
        assert!((s.total() - 63.1572).abs() < 1e-3);
    }

    #[test]
    fn degenerate_single_sample_scores_zero() {
        let atoms = Matrix::<f64>::from_columns(1, &[vec![1.0]]).unwrap();
        let r = Matrix::from_columns(1, &[vec![2.5]]).unwrap();
        let codes = LevelCodes { indices: vec![0], coefficients: vec![2.5] };
        assert_eq!(mdl_score(&r, &atoms, &codes, 1.0).unwrap().total(), 0.0);
    }

    #[test]
    fn model_cost_grows_with_k() {
        for (t, m) in [(10usize, 4usize), (500, 64)] {
            for k in [1usize, 2, 7, 20] {
                let (a1, b1, c1) = model_cost::<f64>(t, m, k);
                let (a2, b2, c2) = model_cost::<f64>(t, m, 2 * k);
                assert_eq!(a1, a2);
                assert!(b2 > b1 && c2 > c1);
            }
        }
    }

    #[test]
    fn invalid_variance() {
        let atoms = Matrix::<f64>::identity(2);
        let r = Matrix::<f64>::identity(2);
        let codes = LevelCodes { indices: vec![0, 1], coefficients: vec![1.0, 1.0] };
        assert!(matches!(mdl_score(&r, &atoms, &codes, 0.0), Err(Error::InvalidVariance(_))));
        assert!(matches!(mdl_score(&r, &atoms, &codes, -1.0), Err(Error::InvalidVariance(_))));
    }

    #[test]
    fn singleton_candidate_passes_through() {
        let mut rng = RngSeed(4).rng();
        let cols: Vec<Vec<f64>> = (0..40).map(|_| (0..5).map(|_| standard_normal(&mut rng)).collect()).collect();
        let data = Matrix::from_columns(5, &cols).unwrap();
        let cfg = MdlConfig { candidate_k: vec![3], max_levels: 3, ..MdlConfig::default() };
        let est = estimate_level_sizes(&data, &cfg, &ClusteringConfig::new(1)).unwrap();
        assert_eq!(est.selected_k, vec![3, 3, 3]);
        assert_eq!(est.output.dictionary.per_level_k(), vec![3, 3, 3]);
    }

    #[test]
    fn planted_three_lines_selected() {
        let mut hits = 0;
        for seed in 0..10u64 {
            let mut rng = RngSeed(seed).rng();
            let lines: Vec<Vec<f64>> = (0..3).map(|_| random_unit_vector(8, &mut rng)).collect();
            let cols: Vec<Vec<f64>> = (0..300)
                .map(|i| {
                    let c: f64 = standard_normal(&mut rng);
                    lines[i % 3]
                        .iter()
                        .map(|a| c * a + 0.01 * standard_normal::<f64, _>(&mut rng))
                        .collect()
                })
                .collect();
            let data = Matrix::from_columns(8, &cols).unwrap();
            let cfg = MdlConfig { candidate_k: (1..=6).collect(), max_levels: 1, ..MdlConfig::default() };
            let est = estimate_level_sizes(&data, &cfg, &ClusteringConfig::new(1).with_seed(seed)).unwrap();
            if est.selected_k == vec![3] {
                hits += 1;
            }
        }
        assert!(hits >= 9, "planted K recovered in {hits}/10 seeds");
    }

    #[test]
    fn white_noise_prefers_smallest_candidate() {
        let mut smallest = 0;
        for seed in 0..10u64 {
            let mut rng = RngSeed(100 + seed).rng();
            let cols: Vec<Vec<f64>> = (0..300).map(|_| (0..8).map(|_| standard_normal(&mut rng)).collect()).collect();
            let data = Matrix::from_columns(8, &cols).unwrap();
            // A single line through isotropic noise holds about 1/M of the energy.
            let cfg = MdlConfig {
                alpha: 1.0 / 8.0,
                candidate_k: (1..=6).collect(),
                max_levels: 1,
                ..MdlConfig::default()
            };
            let est = estimate_level_sizes(&data, &cfg, &ClusteringConfig::new(1).with_seed(seed)).unwrap();
            if est.selected_k[0] == 1 {
                smallest += 1;
            }
        }
        assert!(smallest > 5, "smallest candidate chosen in {smallest}/10 seeds");
    }

    #[test]
    fn argmin_invariant_under_log_base() {
        let mut rng = RngSeed(21).rng();
        let cols: Vec<Vec<f64>> = (0..100).map(|_| (0..6).map(|_| standard_normal(&mut rng)).collect()).collect();
        let data = Matrix::from_columns(6, &cols).unwrap();
        let cfg = MdlConfig { candidate_k: (1..=6).collect(), max_levels: 2, ..MdlConfig::default() };
        let est = estimate_level_sizes(&data, &cfg, &ClusteringConfig::new(1)).unwrap();
        for (level, scores) in est.scores.iter().enumerate() {
            for base in [2.0, 10.0, std::f64::consts::E] {
                let k = scores
                    .iter()
                    .min_by(|a, b| a.1.total_in_base(base).partial_cmp(&b.1.total_in_base(base)).unwrap())
                    .unwrap()
                    .0;
                assert_eq!(k, est.selected_k[level]);
            }
        }
    }
}
