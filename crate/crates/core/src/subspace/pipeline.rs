use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::{
    accuracy, knn_classify, lde, lde_affinities, lde_neighbor_affinities, lpp, neighbor_graph, sparse_code_graph,
    Embedding, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::khyperline::ClusteringConfig;
use crate::mld::{train, train_robust, RobustParams, TrainParams};
use crate::numerics::{Matrix, RngSeed};
use crate::pursuit::{code_matrix, encode_columns, encode_columns_robust, ensemble_code_matrix};

/// Graph construction and embedding of one accuracy column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceMethod {
    /// LPP on a heat-kernel neighbor graph of the samples.
    Lpp,
    /// LPP on the MLD sparse-code graph.
    ScMldLpp,
    /// LPP on the RMLD sparse-code graph.
    ScRmldLpp,
    /// LDE on heat-kernel intra/inter-class neighbor graphs.
    Lde,
    ScMldLde,
    ScRmldLde,
}

impl SubspaceMethod {
    pub const ALL: [Self; 6] = [
        Self::Lpp,
        Self::ScMldLpp,
        Self::ScRmldLpp,
        Self::Lde,
        Self::ScMldLde,
        Self::ScRmldLde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lpp => "lpp",
            Self::ScMldLpp => "sc-mld-lpp",
            Self::ScRmldLpp => "sc-rmld-lpp",
            Self::Lde => "lde",
            Self::ScMldLde => "sc-mld-lde",
            Self::ScRmldLde => "sc-rmld-lde",
        }
    }

    fn supervised(self) -> bool {
        matches!(self, Self::Lde | Self::ScMldLde | Self::ScRmldLde)
    }
}

impl fmt::Display for SubspaceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubspaceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown subspace method '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceConfig {
    pub train_per_class: Vec<usize>,
    /// Test samples per class; `None` uses everything not drawn for training.
    pub test_per_class: Option<usize>,
    pub methods: Vec<SubspaceMethod>,
    pub embed_dim: usize,
    pub tau: usize,
    pub tau_prime: usize,
    /// Levels and sizes of both the MLD and the RMLD.
    pub dictionary: TrainParams,
    pub rounds: usize,
    /// RMLD subset size as a fraction of the training set.
    pub subset_fraction: f64,
    pub clustering: ClusteringConfig,
    /// Z-score every feature with training-set statistics first.
    pub standardize: bool,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub train_per_class: usize,
    pub method: SubspaceMethod,
    pub accuracy: f64,
    /// The learned projection, `M × d`.
    pub embedding: Matrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubspaceReport {
    pub rows: Vec<AccuracyRow>,
}

impl SubspaceReport {
    pub fn accuracy(&self, train_per_class: usize, method: SubspaceMethod) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.train_per_class == train_per_class && r.method == method)
            .map(|r| r.accuracy)
    }

    /// `train_per_class,method,accuracy`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("train_per_class,method,accuracy\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:?}", r.train_per_class, r.method, r.accuracy);
        }
        s
    }
}

/// Per-class random split: `n` training samples from every class, then up to
/// `test` of the rest.
fn split(data: &LabeledDataset, n: usize, test: Option<usize>, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = seed.rng();
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for (class, mut members) in data.class_members().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < n {
            return Err(Error::InvalidArgument(format!(
                "class '{}' has {} samples, fewer than {n} for training",
                data.class_names[class],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let rest = &members[n..];
        tr.extend_from_slice(&members[..n]);
        te.extend_from_slice(&rest[..test.map_or(rest.len(), |t| t.min(rest.len()))]);
    }
    tr.sort_unstable();
    te.sort_unstable();
    Ok((tr, te))
}

/// Per-row mean and standard deviation of `train` applied to both sets.
fn standardize(train: &mut Matrix<f64>, test: &mut Matrix<f64>) {
    let n = train.cols() as f64;
    for r in 0..train.rows() {
        let row = train.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for m in [&mut *train, &mut *test] {
            for c in 0..m.cols() {
                m[(r, c)] = (m[(r, c)] - mean) / sd;
            }
        }
    }
}

/// Runs every method at every training size and reports 1-NN accuracy of the
/// embedded test samples.
pub fn subspace_experiment(data: &LabeledDataset, cfg: &SubspaceConfig) -> Result<SubspaceReport> {
    if data.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(cfg.subset_fraction > 0.0 && cfg.subset_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subset fraction must lie in (0, 1], got {}",
            cfg.subset_fraction
        )));
    }
    let mut report = SubspaceReport::default();
    for &n in &cfg.train_per_class {
        let run_seed = cfg.seed.derive(n as u64);
        let (tr, te) = split(data, n, cfg.test_per_class, run_seed)?;
        if tr.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        if te.is_empty() {
            return Err(Error::InvalidArgument(format!("no test samples left with {n} per class for training")));
        }
        let train_set = data.select(&tr);
        let test_set = data.select(&te);
        let (mut y, mut z) = (train_set.samples, test_set.samples);
        if cfg.standardize {
            standardize(&mut y, &mut z);
        }
        let labels = &train_set.labels;
        let clustering = cfg.clustering.clone().with_seed(run_seed.derive(1).0);

        let needs = |f: fn(SubspaceMethod) -> bool| cfg.methods.iter().any(|&m| f(m));
        let mld_codes = if needs(|m| matches!(m, SubspaceMethod::ScMldLpp | SubspaceMethod::ScMldLde)) {
            let dict = train(&y, &cfg.dictionary, &clustering)?.dictionary;
            let codes = encode_columns(&y, &dict, dict.num_levels())?;
            Some(code_matrix(&codes, &dict.per_level_k())?)
        } else {
            None
        };
        let rmld_codes = if needs(|m| matches!(m, SubspaceMethod::ScRmldLpp | SubspaceMethod::ScRmldLde)) {
            let params = RobustParams {
                levels: cfg.dictionary.clone(),
                rounds: cfg.rounds,
                subset_size: ((y.cols() as f64 * cfg.subset_fraction).round() as usize).clamp(1, y.cols()),
            };
            let dict = train_robust(&y, &params, &clustering)?.dictionary;
            let codes = encode_columns_robust(&y, &dict, dict.num_levels())?;
            Some(ensemble_code_matrix(&codes, &dict.per_level_k(), dict.rounds())?)
        } else {
            None
        };

        for &method in &cfg.methods {
            let codes = match method {
                SubspaceMethod::ScMldLpp | SubspaceMethod::ScMldLde => mld_codes.as_ref(),
                SubspaceMethod::ScRmldLpp | SubspaceMethod::ScRmldLde => rmld_codes.as_ref(),
                SubspaceMethod::Lpp | SubspaceMethod::Lde => None,
            };
            let embedding: Embedding<f64> = if method.supervised() {
                let g = match codes {
                    Some(a) => lde_affinities(a, labels, cfg.tau, cfg.tau_prime)?,
                    None => lde_neighbor_affinities(&y, labels, cfg.tau, cfg.tau_prime)?,
                };
                lde(&y, &g.intra, &g.inter, cfg.embed_dim)?
            } else {
                let g = match codes {
                    Some(a) => sparse_code_graph(a, cfg.tau)?,
                    None => neighbor_graph(&y, cfg.tau)?,
                };
                lpp(&y, &g, cfg.embed_dim)?
            };
            let pred = knn_classify(&embedding.apply(&y)?, labels, &embedding.apply(&z)?, 1)?;
            report.rows.push(AccuracyRow {
                train_per_class: n,
                method,
                accuracy: accuracy(&pred, &test_set.labels)?,
                embedding: embedding.v,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::two_class_gaussian;

    fn config() -> SubspaceConfig {
        SubspaceConfig {
            train_per_class: vec![30],
            test_per_class: Some(50),
            methods: SubspaceMethod::ALL.to_vec(),
            embed_dim: 2,
            tau: 5,
            tau_prime: 5,
            dictionary: TrainParams::new(4, 2),
            rounds: 3,
            subset_fraction: 0.5,
            clustering: ClusteringConfig::new(1),
            standardize: true,
            seed: RngSeed(3),
        }
    }

    #[test]
    fn runs_every_method_deterministically() {
        let data = two_class_gaussian(5, 100, RngSeed(1)).unwrap();
        let a = subspace_experiment(&data, &config()).unwrap();
        assert_eq!(a.rows.len(), 6);
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.accuracy));
            assert_eq!(r.embedding.shape(), (5, 2));
        }
        // The class signal is in a low-variance direction; LDE must find it.
        assert!(a.accuracy(30, SubspaceMethod::Lde).unwrap() > 0.8);
        let b = subspace_experiment(&data, &config()).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("train_per_class,method,accuracy\n30,lpp,"));
    }

    #[test]
    fn split_is_per_class_and_disjoint() {
        let data = two_class_gaussian(3, 10, RngSeed(2)).unwrap();
        let (tr, te) = split(&data, 4, Some(3), RngSeed(5)).unwrap();
        assert_eq!(tr.len(), 8);
        assert_eq!(te.len(), 6);
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!(tr.iter().filter(|&&i| data.labels[i] == 0).count(), 4);
        assert!(split(&data, 11, None, RngSeed(5)).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in SubspaceMethod::ALL {
            assert_eq!(m.name().parse::<SubspaceMethod>().unwrap(), m);
        }
        assert!("pca".parse::<SubspaceMethod>().is_err());
    }
}
