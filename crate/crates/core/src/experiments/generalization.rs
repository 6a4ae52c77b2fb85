use std::fmt::Write as _;

use super::SampleSource;
use crate::error::{Error, Result};
use crate::khyperline::ClusteringConfig;
use crate::mld::{estimate_level_sizes, train, train_robust, MdlConfig, RobustParams, TrainParams};
use crate::numerics::{Matrix, RngSeed};
use crate::pursuit::{mulp_level_mse, rmld_level_mse};

#[derive(Debug, Clone)]
pub struct GeneralizationConfig {
    pub t_values: Vec<usize>,
    /// Fixed MLD level sizes, used when `mdl` is `None`.
    pub mld: TrainParams,
    /// Pick MLD level sizes by minimum description length instead.
    pub mdl: Option<MdlConfig>,
    pub rmld: TrainParams,
    pub rounds: usize,
    /// Subset size of each RMLD round as a fraction of T (at least one sample).
    pub subset_fraction: f64,
    /// Rounds for the MSE-versus-rounds curve at the largest T.
    pub rounds_curve: Vec<usize>,
    pub clustering: ClusteringConfig,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseRow {
    pub method: &'static str,
    pub t: usize,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCurvePoint {
    pub method: &'static str,
    pub t: usize,
    pub levels_used: usize,
    pub test_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundsPoint {
    pub t: usize,
    pub rounds: usize,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneralizationReport {
    pub rows: Vec<MseRow>,
    /// Test MSE against levels used, for every T.
    pub level_curves: Vec<LevelCurvePoint>,
    pub rounds_curve: Vec<RoundsPoint>,
}

impl GeneralizationReport {
    pub fn test_mse(&self, method: &str, t: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.t == t)
            .map(|r| r.test_mse)
    }

    /// `method,T,train_mse,test_mse`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,T,train_mse,test_mse\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:?},{:?}", r.method, r.t, r.train_mse, r.test_mse);
        }
        s
    }

    /// `method,T,levels_used,test_mse`
    pub fn levels_csv(&self) -> String {
        let mut s = String::from("method,T,levels_used,test_mse\n");
        for p in &self.level_curves {
            let _ = writeln!(s, "{},{},{},{:?}", p.method, p.t, p.levels_used, p.test_mse);
        }
        s
    }

    /// `T,rounds,train_mse,test_mse`
    pub fn rounds_csv(&self) -> String {
        let mut s = String::from("T,rounds,train_mse,test_mse\n");
        for p in &self.rounds_curve {
            let _ = writeln!(s, "{},{},{:?},{:?}", p.t, p.rounds, p.train_mse, p.test_mse);
        }
        s
    }
}

fn mse(residual: &Matrix<f64>) -> f64 {
    residual.frobenius_norm_sq() / (residual.rows() * residual.cols()) as f64
}

fn subset_size(t: usize, fraction: f64) -> usize {
    ((t as f64 * fraction).round() as usize).clamp(1, t)
}

/// Trains MLD and RMLD on `T` samples from `source` for every T and
/// measures the representation error of `test`.
pub fn generalization_experiment(
    source: &SampleSource,
    test: &Matrix<f64>,
    cfg: &GeneralizationConfig,
) -> Result<GeneralizationReport> {
    if test.cols() == 0 {
        return Err(Error::EmptySamples);
    }
    if test.rows() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: test.rows(),
        });
    }
    if !(cfg.subset_fraction > 0.0 && cfg.subset_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subset fraction must lie in (0, 1], got {}",
            cfg.subset_fraction
        )));
    }
    let mut report = GeneralizationReport::default();
    for &t in &cfg.t_values {
        let data = source.draw(t, &mut cfg.seed.derive(t as u64).rng())?;
        let clustering = cfg.clustering.clone().with_seed(cfg.seed.derive(t as u64).derive(1).0);

        let mld = match &cfg.mdl {
            Some(mdl) => estimate_level_sizes(&data, mdl, &clustering)?.output,
            None => train(&data, &cfg.mld, &clustering)?,
        };
        let curve = mulp_level_mse(test, &mld.dictionary)?;
        report.rows.push(MseRow {
            method: "mld",
            t,
            train_mse: mse(&mld.residual),
            test_mse: *curve.last().expect("curve has the zero-level point"),
        });
        report.level_curves.extend(curve.iter().enumerate().map(|(l, &m)| LevelCurvePoint {
            method: "mld",
            t,
            levels_used: l,
            test_mse: m,
        }));

        let params = RobustParams {
            levels: cfg.rmld.clone(),
            rounds: cfg.rounds,
            subset_size: subset_size(t, cfg.subset_fraction),
        };
        let rmld = train_robust(&data, &params, &clustering)?;
        let curve = rmld_level_mse(test, &rmld.dictionary)?;
        report.rows.push(MseRow {
            method: "rmld",
            t,
            train_mse: mse(&rmld.residual),
            test_mse: *curve.last().expect("curve has the zero-level point"),
        });
        report.level_curves.extend(curve.iter().enumerate().map(|(l, &m)| LevelCurvePoint {
            method: "rmld",
            t,
            levels_used: l,
            test_mse: m,
        }));
    }

    if let Some(&t) = cfg.t_values.iter().max() {
        let data = source.draw(t, &mut cfg.seed.derive(t as u64).rng())?;
        let clustering = cfg.clustering.clone().with_seed(cfg.seed.derive(t as u64).derive(1).0);
        for &rounds in &cfg.rounds_curve {
            let params = RobustParams {
                levels: cfg.rmld.clone(),
                rounds,
                subset_size: subset_size(t, cfg.subset_fraction),
            };
            let rmld = train_robust(&data, &params, &clustering)?;
            let curve = rmld_level_mse(test, &rmld.dictionary)?;
            report.rounds_curve.push(RoundsPoint {
                t,
                rounds,
                train_mse: mse(&rmld.residual),
                test_mse: *curve.last().expect("curve has the zero-level point"),
            });
        }
    }
    Ok(report)
}
