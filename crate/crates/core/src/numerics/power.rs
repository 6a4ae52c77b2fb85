use super::matrix::{axpy, dot, norm, normalize, canonical_sign, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stopping rule for the power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub max_iters: usize,
    /// Stop once successive unit iterates differ by less than this in ℓ2 norm.
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

/// Dominant left singular vector of `y` by the iteration
/// `ψ ← Y Yᵀ ψ / ‖Y Yᵀ ψ‖₂` started from `init`.
///
/// The result is sign-normalized (first nonzero entry nonnegative). With a
/// repeated top singular value the returned vector depends on `init`.
/// If `init` is orthogonal to the column space of `y`, the iteration restarts
/// from the largest-norm column.
pub fn dominant_left_singular_vector<T: Scalar>(
    y: &Matrix<T>,
    init: &[T],
    opts: &PowerIteration,
) -> Result<Vec<T>> {
    if y.cols() == 0 {
        return Err(Error::EmptySamples);
    }
    if init.len() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: y.rows(),
            found: init.len(),
        });
    }
    if opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("power iteration tol must be > 0".into()));
    }
    let init_norm = norm(init);
    if (init_norm - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::InvalidArgument(format!(
            "initial vector must have unit norm, got {init_norm}"
        )));
    }
    if y.frobenius_norm_sq() == T::zero() {
        return Err(Error::ZeroMatrix);
    }

    let op = GramOperator::new(y);
    let tol = T::lit(opts.tol);
    let mut psi = init.to_vec();
    let mut restarted = false;
    let mut iter = 0;
    while iter < opts.max_iters.max(1) {
        let mut next = op.apply(&psi);
        if normalize(&mut next) == T::zero() {
            if restarted {
                break;
            }
            restarted = true;
            psi = largest_column(y);
            continue;
        }
        let diff = next
            .iter()
            .zip(&psi)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        psi = next;
        iter += 1;
        if diff < tol {
            break;
        }
    }
    canonical_sign(&mut psi);
    Ok(psi)
}

fn largest_column<T: Scalar>(y: &Matrix<T>) -> Vec<T> {
    let mut best = 0;
    let mut best_norm = T::zero();
    for (j, c) in y.columns().enumerate() {
        let n = dot(c, c);
        if n > best_norm {
            best_norm = n;
            best = j;
        }
    }
    let mut v = y.col(best).to_vec();
    normalize(&mut v);
    v
}

/// Applies `Y Yᵀ`, either through an explicit M×M Gram matrix (many columns)
/// or in factored form (few columns).
enum GramOperator<'a, T> {
    Dense(Matrix<T>),
    Factored(&'a Matrix<T>),
}

impl<'a, T: Scalar> GramOperator<'a, T> {
    fn new(y: &'a Matrix<T>) -> Self {
        if y.cols() > y.rows() {
            GramOperator::Dense(gram(y))
        } else {
            GramOperator::Factored(y)
        }
    }

    fn apply(&self, v: &[T]) -> Vec<T> {
        match self {
            GramOperator::Dense(g) => g.matvec(v).expect("square gram"),
            GramOperator::Factored(y) => {
                let mut out = vec![T::zero(); y.rows()];
                for c in y.columns() {
                    axpy(dot(c, v), c, &mut out);
                }
                out
            }
        }
    }
}

/// `Y Yᵀ`.
pub fn gram<T: Scalar>(y: &Matrix<T>) -> Matrix<T> {
    let m = y.rows();
    let mut g = Matrix::zeros(m, m);
    for c in y.columns() {
        for j in 0..m {
            let cj = c[j];
            if cj == T::zero() {
                continue;
            }
            let dst = g.col_mut(j);
            for i in j..m {
                dst[i] += c[i] * cj;
            }
        }
    }
    for j in 0..m {
        for i in (j + 1)..m {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}
