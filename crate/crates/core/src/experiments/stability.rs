use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use super::dictionary_difference;
use crate::datasets::draw_planted;
use crate::error::{Error, Result};
use crate::khyperline::ClusteringConfig;
use crate::mld::{train, TrainParams};
use crate::numerics::{Matrix, RngSeed, SeededRng};

/// Where training samples come from.
#[derive(Debug, Clone)]
pub enum SampleSource {
    /// Fresh draws from a planted multilevel model.
    Planted {
        atoms: Vec<Matrix<f64>>,
        noise_sigma: f64,
        energy_decay: f64,
    },
    /// Uniform draws with replacement from a fixed pool (e.g. image patches).
    Pool(Matrix<f64>),
}

impl SampleSource {
    pub fn dim(&self) -> usize {
        match self {
            Self::Planted { atoms, .. } => atoms.first().map_or(0, Matrix::rows),
            Self::Pool(p) => p.rows(),
        }
    }

    pub fn draw(&self, count: usize, rng: &mut SeededRng) -> Result<Matrix<f64>> {
        match self {
            Self::Planted {
                atoms,
                noise_sigma,
                energy_decay,
            } => Ok(draw_planted(atoms, count, *noise_sigma, *energy_decay, rng)?.data),
            Self::Pool(p) => {
                if p.cols() == 0 {
                    return Err(Error::EmptySamples);
                }
                let idx: Vec<usize> = (0..count).map(|_| rng.random_range(0..p.cols())).collect();
                Ok(p.select_columns(&idx))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityConfig {
    pub t_values: Vec<usize>,
    /// Replacement counts larger than a given T are skipped for that T.
    pub replace_counts: Vec<usize>,
    pub trials: usize,
    pub train: TrainParams,
    pub clustering: ClusteringConfig,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub t: usize,
    pub replace_count: usize,
    pub trial: usize,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    /// Mean difference over trials for `(t, replace_count)`, if it was run.
    pub fn mean(&self, t: usize, replace_count: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.t == t && r.replace_count == replace_count)
            .map(|r| r.difference)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// One line per trial: `T,replace_count,trial,difference`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,replace_count,trial,difference\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{:?}", r.t, r.replace_count, r.trial, r.difference);
        }
        s
    }

    /// Trial means: `T,replace_count,mean_difference`.
    pub fn summary_csv(&self) -> String {
        let mut keys: Vec<(usize, usize)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.t, r.replace_count)) {
                keys.push((r.t, r.replace_count));
            }
        }
        let mut s = String::from("T,replace_count,mean_difference\n");
        for (t, n) in keys {
            let _ = writeln!(s, "{t},{n},{:?}", self.mean(t, n).unwrap_or(f64::NAN));
        }
        s
    }
}

/// For each T and trial, trains on a base set and on copies with
/// `replace_count` samples swapped for fresh draws, recording the
/// dictionary difference. Replaced positions and fresh samples are nested,
/// so a larger count replaces a superset of a smaller one. Both trainings
/// use the same clustering seed.
pub fn stability_experiment(
    source: &SampleSource,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    cfg.train.validate()?;
    if cfg.t_values.contains(&0) {
        return Err(Error::EmptyTrainingSet);
    }
    let jobs: Vec<(usize, usize)> = cfg
        .t_values
        .iter()
        .flat_map(|&t| (0..cfg.trials).map(move |trial| (t, trial)))
        .collect();
    let per_job: Vec<Result<Vec<StabilityRow>>> = jobs
        .par_iter()
        .map(|&(t, trial)| {
            let trial_seed = cfg.seed.derive(t as u64).derive(trial as u64);
            let mut rng = trial_seed.rng();
            let base = source.draw(t, &mut rng)?;
            let counts: Vec<usize> = cfg.replace_counts.iter().copied().filter(|&n| n <= t).collect();
            let max_n = counts.iter().copied().max().unwrap_or(0);
            let fresh = source.draw(max_n, &mut rng)?;
            let order = rand::seq::index::sample(&mut rng, t, max_n).into_vec();
            let clustering = cfg.clustering.clone().with_seed(trial_seed.derive(1).0);
            let reference = train(&base, &cfg.train, &clustering)?.dictionary;
            counts
                .iter()
                .map(|&n| {
                    let mut set = base.clone();
                    for (k, &pos) in order[..n].iter().enumerate() {
                        set.col_mut(pos).copy_from_slice(fresh.col(k));
                    }
                    let other = train(&set, &cfg.train, &clustering)?.dictionary;
                    let difference = if other.per_level_k() == reference.per_level_k() {
                        dictionary_difference(&reference, &other)?.value
                    } else {
                        f64::NAN
                    };
                    Ok(StabilityRow {
                        t,
                        replace_count: n,
                        trial,
                        difference,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(StabilityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synth_hyperlines, SynthConfig};

    fn source(seed: u64) -> SampleSource {
        let s = synth_hyperlines(&SynthConfig {
            dim: 8,
            k_per_level: vec![4],
            levels: 2,
            samples: 1,
            noise_sigma: 0.05,
            energy_decay: 0.3,
            seed: RngSeed(seed),
        })
        .unwrap();
        SampleSource::Planted {
            atoms: s.planted,
            noise_sigma: 0.05,
            energy_decay: 0.3,
        }
    }

    #[test]
    fn zero_replacement_is_zero() {
        let cfg = StabilityConfig {
            t_values: vec![200],
            replace_counts: vec![0, 50],
            trials: 2,
            train: TrainParams::new(4, 2),
            clustering: ClusteringConfig::new(1),
            seed: RngSeed(3),
        };
        let rep = stability_experiment(&source(1), &cfg).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert_eq!(rep.mean(200, 0), Some(0.0));
        assert!(rep.mean(200, 50).unwrap() >= 0.0);
        assert!(rep.to_csv().starts_with("T,replace_count,trial,difference\n200,0,0,0.0\n"));
    }

    #[test]
    fn counts_above_t_are_skipped_and_runs_repeat() {
        let cfg = StabilityConfig {
            t_values: vec![60, 120],
            replace_counts: vec![10, 100],
            trials: 1,
            train: TrainParams::new(3, 2),
            clustering: ClusteringConfig::new(1),
            seed: RngSeed(4),
        };
        let a = stability_experiment(&source(2), &cfg).unwrap();
        assert_eq!(a.rows.iter().filter(|r| r.t == 60).count(), 1);
        assert_eq!(a.rows.iter().filter(|r| r.t == 120).count(), 2);
        let b = stability_experiment(&source(2), &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
