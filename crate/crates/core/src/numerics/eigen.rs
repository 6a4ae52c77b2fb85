//! Dense symmetric eigensolvers: cyclic Jacobi, and the symmetric-definite
//! generalized problem `A v = λ B v` through a Cholesky reduction.

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which end of the spectrum to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenOrder {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    /// One eigenvector per column, in the same order as `values`.
    pub vectors: Matrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// All eigenpairs of a symmetric matrix, eigenvalues ascending.
pub fn symmetric_eig<T: Scalar>(a: &Matrix<T>) -> Result<EigenPairs<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    let mut s = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for j in 0..n {
            for i in 0..j {
                off += s[(i, j)] * s[(i, j)];
            }
        }
        if off.sqrt() <= eps * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = s[(p, p)];
                let aqq = s[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].partial_cmp(&s[(j, j)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(EigenPairs { values, vectors })
}

/// Lower-triangular `L` with `B = L Lᵀ`.
pub fn cholesky<T: Scalar>(b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = b.rows();
    if b.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.cols(),
        });
    }
    let max_diag = (0..n).map(|i| b[(i, i)].abs()).fold(T::zero(), T::max);
    let floor = T::epsilon() * max_diag * T::from_usize_lossy(n.max(1));
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L x = rhs` in place for lower-triangular `L`.
fn forward_solve<T: Scalar>(l: &Matrix<T>, x: &mut [T]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
}

/// Solves `Lᵀ x = rhs` in place.
fn backward_solve_transposed<T: Scalar>(l: &Matrix<T>, x: &mut [T]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
}

/// The `d` extremal eigenpairs of `A v = λ B v` for symmetric `A` and
/// symmetric positive-definite `B`. Eigenvectors are B-orthonormal.
///
/// `Smallest` returns eigenvalues ascending, `Largest` descending.
pub fn generalized_symmetric_eig<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    d: usize,
    order: EigenOrder,
) -> Result<EigenPairs<T>> {
    let n = a.rows();
    for m in [a, b] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if m.rows() != n { m.rows() } else { m.cols() },
            });
        }
    }
    if d > n {
        return Err(Error::InvalidArgument(format!(
            "requested {d} eigenpairs of a {n}x{n} problem"
        )));
    }
    let l = cholesky(b)?;

    // C = L⁻¹ A L⁻ᵀ, built column by column from X = L⁻¹ A.
    let mut x = a.clone();
    for j in 0..n {
        forward_solve(&l, x.col_mut(j));
    }
    let mut c = x.transpose();
    for j in 0..n {
        forward_solve(&l, c.col_mut(j));
    }
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = (c[(i, j)] + c[(j, i)]) * T::lit(0.5);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }

    let eig = symmetric_eig(&c)?;
    let picked: Vec<usize> = match order {
        EigenOrder::Smallest => (0..d).collect(),
        EigenOrder::Largest => (0..d).map(|k| n - 1 - k).collect(),
    };
    let values = picked.iter().map(|&k| eig.values[k]).collect();
    let mut vectors = eig.vectors.select_columns(&picked);
    for j in 0..d {
        backward_solve_transposed(&l, vectors.col_mut(j));
    }
    Ok(EigenPairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::norm;
    use crate::numerics::random::{standard_normal, RngSeed};

    fn diag(v: &[f64]) -> Matrix<f64> {
        let mut m = Matrix::zeros(v.len(), v.len());
        for (i, &x) in v.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[test]
    fn identity_pair() {
        let i3 = Matrix::<f64>::identity(3);
        let e = generalized_symmetric_eig(&i3, &i3, 2, EigenOrder::Smallest).unwrap();
        assert_eq!(e.values.len(), 2);
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let gram = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(gram.max_abs_diff(&Matrix::identity(2)) < 1e-14);
    }

    #[test]
    fn diagonal_smallest() {
        let a = diag(&[1.0, 2.0, 3.0]);
        let e = generalized_symmetric_eig(&a, &Matrix::identity(3), 1, EigenOrder::Smallest).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        let v = e.vectors.col(0);
        assert!((v[0].abs() - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14 && v[2].abs() < 1e-14);
    }

    #[test]
    fn diagonal_largest_descending() {
        let a = diag(&[1.0, 5.0, 3.0]);
        let e = generalized_symmetric_eig(&a, &Matrix::identity(3), 2, EigenOrder::Largest).unwrap();
        assert!((e.values[0] - 5.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_b_rejected() {
        let a = Matrix::<f64>::identity(2);
        let b = diag(&[1.0, -1.0]);
        assert!(matches!(
            generalized_symmetric_eig(&a, &b, 1, EigenOrder::Smallest),
            Err(Error::NotPositiveDefinite)
        ));
        let bad = Matrix::<f64>::zeros(3, 3);
        assert!(matches!(
            generalized_symmetric_eig(&a, &bad, 1, EigenOrder::Smallest),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residuals_small_on_random_problems() {
        let mut rng = RngSeed(11).rng();
        for n in [2usize, 5, 9] {
            let g = Matrix::from_col_major(n, n, (0..n * n).map(|_| standard_normal::<f64, _>(&mut rng)).collect())
                .unwrap();
            let a = g.transpose().matmul(&g).unwrap().sub(&diag(&vec![2.0; n])).unwrap();
            let h = Matrix::from_col_major(n, n, (0..n * n).map(|_| standard_normal::<f64, _>(&mut rng)).collect())
                .unwrap();
            let b = h.transpose().matmul(&h).unwrap();
            let b = b.sub(&diag(&vec![-1.0; n])).unwrap();
            let e = generalized_symmetric_eig(&a, &b, n, EigenOrder::Smallest).unwrap();
            for k in 0..n {
                let v = e.vectors.col(k);
                let av = a.matvec(v).unwrap();
                let bv = b.matvec(v).unwrap();
                let r: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x - e.values[k] * y).collect();
                let bound = 1e-8 * (a.frobenius_norm() + e.values[k].abs() * b.frobenius_norm());
                assert!(norm(&r) <= bound, "n={n} k={k} residual {}", norm(&r));
            }
            let vbv = e.vectors.transpose().matmul(&b).unwrap().matmul(&e.vectors).unwrap();
            assert!(vbv.max_abs_diff(&Matrix::identity(n)) < 1e-9);
        }
    }

    #[test]
    fn jacobi_sorts_ascending() {
        let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eig(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }
}
