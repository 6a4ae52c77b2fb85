//! Graph-embedding subspace learning on sparse-code affinity graphs.
//!
//! The affinity between two training samples is the absolute correlation of
//! their sparse codes, kept only for each sample's strongest neighbors. The
//! resulting graph drives locality preserving projections (unsupervised) or
//! local discriminant embedding (supervised), and the embedded samples are
//! classified by nearest neighbor.

mod data;
mod pipeline;

pub use data::{load_labeled_csv, parse_labeled_csv, two_class_gaussian, write_labeled_csv, LabeledDataset};
pub use pipeline::{subspace_experiment, AccuracyRow, SubspaceConfig, SubspaceMethod, SubspaceReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dist_sq, generalized_symmetric_eig, EigenOrder, Matrix};
use crate::scalar::Scalar;

/// A symmetric, nonnegative, sparsified affinity graph with its degrees and
/// Laplacian `L = D − W`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph<T> {
    pub w: Matrix<T>,
    pub degree: Vec<T>,
    pub laplacian: Matrix<T>,
}

impl<T: Scalar> AffinityGraph<T> {
    /// Builds degrees and Laplacian from a symmetric weight matrix.
    pub fn from_weights(w: Matrix<T>) -> Result<Self> {
        let n = w.rows();
        if w.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.cols(),
            });
        }
        let degree: Vec<T> = (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect();
        let mut laplacian = w.scaled(-T::one());
        for (i, &d) in degree.iter().enumerate() {
            laplacian[(i, i)] += d;
        }
        Ok(Self { w, degree, laplacian })
    }

    pub fn nodes(&self) -> usize {
        self.w.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.as_slice().iter().all(|&x| x == T::zero())
    }
}

/// Keeps, for every row, the `tau` largest entries `full[(i, j)]` with
/// `j ≠ i` and `allowed(i, j)`; ties go to the lower column index. The kept
/// pattern is symmetrized by taking the larger of `w_ij` and `w_ji`.
fn sparsify<T: Scalar>(full: &Matrix<T>, tau: usize, allowed: impl Fn(usize, usize) -> bool + Sync) -> Matrix<T> {
    let n = full.rows();
    let kept: Vec<Vec<(usize, T)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i && allowed(i, j)).collect();
            // Stable sort on descending weight keeps lower indices first among ties.
            cand.sort_by(|&a, &b| full[(i, b)].partial_cmp(&full[(i, a)]).expect("finite affinities"));
            cand.truncate(tau);
            cand.into_iter().map(|j| (j, full[(i, j)])).collect()
        })
        .collect();
    let mut w = Matrix::zeros(n, n);
    for (i, row) in kept.iter().enumerate() {
        for &(j, v) in row {
            if v > w[(i, j)] {
                w[(i, j)] = v;
            }
            if v > w[(j, i)] {
                w[(j, i)] = v;
            }
        }
    }
    w
}

fn validate_codes<T: Scalar>(a: &Matrix<T>, tau: usize) -> Result<()> {
    if a.cols() == 0 || a.rows() == 0 {
        return Err(Error::EmptyCodes);
    }
    if tau == 0 {
        return Err(Error::InvalidArgument("neighbor count must be at least 1".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("code matrix has non-finite entries".into()));
    }
    Ok(())
}

/// `|AᵀA|` with a zero diagonal.
fn code_correlations<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let mut g = a.transpose().matmul(a)?.map(T::abs);
    for i in 0..g.rows() {
        g[(i, i)] = T::zero();
    }
    Ok(g)
}

/// Affinity graph of the columns of a code matrix `A`: `W = |AᵀA|` without
/// self loops, each row reduced to its `tau` largest similarities, then
/// symmetrized by elementwise max.
pub fn sparse_code_graph<T: Scalar>(a: &Matrix<T>, tau: usize) -> Result<AffinityGraph<T>> {
    validate_codes(a, tau)?;
    let full = code_correlations(a)?;
    AffinityGraph::from_weights(sparsify(&full, tau, |_, _| true))
}

/// Heat-kernel `tau`-nearest-neighbor graph on the samples themselves, the
/// usual graph for plain LPP. The kernel width is the mean squared distance
/// over all pairs.
pub fn neighbor_graph<T: Scalar>(y: &Matrix<T>, tau: usize) -> Result<AffinityGraph<T>> {
    AffinityGraph::from_weights(sparsify(&heat_kernel(y, tau)?, tau, |_, _| true))
}

fn heat_kernel<T: Scalar>(y: &Matrix<T>, tau: usize) -> Result<Matrix<T>> {
    validate_codes(y, tau)?;
    let n = y.cols();
    let mut d2 = Matrix::zeros(n, n);
    let mut total = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist_sq(y.col(i), y.col(j));
            d2[(i, j)] = v;
            d2[(j, i)] = v;
            total += v;
        }
    }
    let pairs = T::from_usize_lossy((n * n.saturating_sub(1) / 2).max(1));
    let width = total / pairs;
    let width = if width > T::zero() { width } else { T::one() };
    let mut k = d2.map(|v| (-v / width).exp());
    for i in 0..n {
        k[(i, i)] = T::zero();
    }
    Ok(k)
}

/// Intra-class and inter-class graphs for discriminant embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct LdeAffinities<T> {
    pub intra: AffinityGraph<T>,
    pub inter: AffinityGraph<T>,
    /// All samples share one label, so the inter-class graph is empty.
    pub single_class: bool,
}

/// Intra-class (`tau` neighbors) and inter-class (`tau_prime` neighbors)
/// affinity graphs, neighbors ranked by decreasing `|aᵢᵀaⱼ|`.
pub fn lde_affinities<T: Scalar>(
    a: &Matrix<T>,
    labels: &[usize],
    tau: usize,
    tau_prime: usize,
) -> Result<LdeAffinities<T>> {
    validate_codes(a, tau.min(tau_prime))?;
    check_labels(a.cols(), labels)?;
    let full = code_correlations(a)?;
    labeled_graphs(&full, labels, tau, tau_prime)
}

/// Heat-kernel counterpart of [`lde_affinities`], ranked by Euclidean distance.
pub fn lde_neighbor_affinities<T: Scalar>(
    y: &Matrix<T>,
    labels: &[usize],
    tau: usize,
    tau_prime: usize,
) -> Result<LdeAffinities<T>> {
    check_labels(y.cols(), labels)?;
    let full = heat_kernel(y, tau.min(tau_prime))?;
    labeled_graphs(&full, labels, tau, tau_prime)
}

fn check_labels(n: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    Ok(())
}

fn labeled_graphs<T: Scalar>(
    full: &Matrix<T>,
    labels: &[usize],
    tau: usize,
    tau_prime: usize,
) -> Result<LdeAffinities<T>> {
    let single_class = labels.windows(2).all(|w| w[0] == w[1]);
    if single_class {
        log::warn!("all samples share one label; the inter-class graph is empty");
    }
    Ok(LdeAffinities {
        intra: AffinityGraph::from_weights(sparsify(full, tau, |i, j| labels[i] == labels[j]))?,
        inter: AffinityGraph::from_weights(sparsify(full, tau_prime, |i, j| labels[i] != labels[j]))?,
        single_class,
    })
}

/// Linear projection `z = Vᵀy` onto `d` learned directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    /// `M × d`, one direction per column.
    pub v: Matrix<T>,
    /// Generalized eigenvalue of each direction.
    pub values: Vec<T>,
    /// Whether the constraint matrix needed a diagonal shift to factor.
    pub regularized: bool,
}

impl<T: Scalar> Embedding<T> {
    pub fn dim(&self) -> usize {
        self.v.cols()
    }

    /// Embeds every column of `y`, giving a `d × n` matrix.
    pub fn apply(&self, y: &Matrix<T>) -> Result<Matrix<T>> {
        self.v.transpose().matmul(y)
    }
}

/// `Y G Yᵀ` for a `T × T` matrix `G`.
fn sandwich<T: Scalar>(y: &Matrix<T>, g: &Matrix<T>) -> Result<Matrix<T>> {
    let mut s = y.matmul(g)?.matmul(&y.transpose())?;
    let n = s.rows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = (s[(i, j)] + s[(j, i)]) * T::lit(0.5);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(s)
}

fn degree_matrix<T: Scalar>(g: &AffinityGraph<T>) -> Matrix<T> {
    let mut d = Matrix::zeros(g.nodes(), g.nodes());
    for (i, &v) in g.degree.iter().enumerate() {
        d[(i, i)] = v;
    }
    d
}

/// Solves `A v = λ B v`; if `B` does not factor, retries with
/// `B + 1e-8·(trace(B)/M)·I`, falling back to the scale of `A` and then to 1
/// when `B` has zero trace.
fn solve_regularized<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    d: usize,
    order: EigenOrder,
) -> Result<Embedding<T>> {
    let m = a.rows();
    if d == 0 || d > m {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension must lie in 1..={m}, got {d}"
        )));
    }
    match generalized_symmetric_eig(a, b, d, order) {
        Ok(e) => Ok(Embedding {
            v: e.vectors,
            values: e.values,
            regularized: false,
        }),
        Err(Error::NotPositiveDefinite) => {
            let mf = T::from_usize_lossy(m);
            let scale = [b.trace(), a.trace().abs()]
                .into_iter()
                .map(|t| t / mf)
                .find(|&t| t > T::zero() && t.is_finite())
                .unwrap_or_else(T::one);
            let mut br = b.clone();
            for i in 0..m {
                br[(i, i)] += T::lit(1e-8) * scale;
            }
            log::debug!("constraint matrix regularized by {:e}", (T::lit(1e-8) * scale).as_f64());
            let e = generalized_symmetric_eig(a, &br, d, order)?;
            Ok(Embedding {
                v: e.vectors,
                values: e.values,
                regularized: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn check_graph<T: Scalar>(y: &Matrix<T>, g: &AffinityGraph<T>) -> Result<()> {
    if g.nodes() != y.cols() {
        return Err(Error::DimensionMismatch {
            expected: y.cols(),
            found: g.nodes(),
        });
    }
    Ok(())
}

/// Locality preserving projections: the `d` directions minimizing
/// `trace(VᵀYLYᵀV)` subject to `VᵀYDYᵀV = I`.
pub fn lpp<T: Scalar>(y: &Matrix<T>, graph: &AffinityGraph<T>, d: usize) -> Result<Embedding<T>> {
    check_graph(y, graph)?;
    if graph.is_empty() {
        return Err(Error::DegenerateGraph);
    }
    let a = sandwich(y, &graph.laplacian)?;
    let b = sandwich(y, &degree_matrix(graph))?;
    solve_regularized(&a, &b, d, EigenOrder::Smallest)
}

/// Local discriminant embedding in its ratio-trace form: the `d` largest
/// generalized eigenvectors of `(Y L′ Yᵀ, Y L Yᵀ)`, with `L` from the
/// intra-class graph and `L′` from the inter-class graph.
pub fn lde<T: Scalar>(
    y: &Matrix<T>,
    intra: &AffinityGraph<T>,
    inter: &AffinityGraph<T>,
    d: usize,
) -> Result<Embedding<T>> {
    check_graph(y, intra)?;
    check_graph(y, inter)?;
    if inter.is_empty() {
        return Err(Error::DegenerateGraph);
    }
    let a = sandwich(y, &inter.laplacian)?;
    let b = sandwich(y, &intra.laplacian)?;
    solve_regularized(&a, &b, d, EigenOrder::Largest)
}

/// Majority label among the `k` nearest training columns (Euclidean). Vote
/// ties, and distance ties, go to the lowest training index.
pub fn knn_classify<T: Scalar>(
    train: &Matrix<T>,
    train_labels: &[usize],
    test: &Matrix<T>,
    k: usize,
) -> Result<Vec<usize>> {
    if train.cols() == 0 {
        return Err(Error::EmptyTrainSet);
    }
    check_labels(train.cols(), train_labels)?;
    if test.rows() != train.rows() && test.cols() > 0 {
        return Err(Error::DimensionMismatch {
            expected: train.rows(),
            found: test.rows(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(train.cols());
    Ok(test
        .columns()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| {
            let mut d: Vec<(T, usize)> = train.columns().map(|c| dist_sq(c, x)).zip(0..).collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
            let nearest = &d[..k];
            // Label with the most votes; among equals, the one met first.
            let mut best = (0usize, train_labels[nearest[0].1]);
            for (rank, &(_, i)) in nearest.iter().enumerate() {
                let label = train_labels[i];
                if nearest[..rank].iter().any(|&(_, j)| train_labels[j] == label) {
                    continue;
                }
                let votes = nearest.iter().filter(|&&(_, j)| train_labels[j] == label).count();
                if votes > best.0 {
                    best = (votes, label);
                }
            }
            best.1
        })
        .collect())
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_labels(truth.len(), predicted)?;
    if truth.is_empty() {
        return Err(Error::EmptySamples);
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
