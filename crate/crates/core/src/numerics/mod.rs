//! Dense kernels shared by every other module.

mod eigen;
mod matrix;
mod power;
mod random;

pub use eigen::{cholesky, generalized_symmetric_eig, symmetric_eig, EigenOrder, EigenPairs};
pub use matrix::{
    axpy, canonical_sign, dist_sq, dot, norm, norm_sq, normalize, scale, sub_vec, Matrix,
};
pub use power::{dominant_left_singular_vector, gram, PowerIteration};
pub use random::{
    gaussian_vector, random_unit_vector, sample_indices, standard_normal, RngSeed, SeededRng,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Peak signal-to-noise ratio in dB, `10·log10(peak² / MSE)`.
///
/// Identical inputs have zero MSE; the result is then `+∞`.
pub fn psnr<T: Scalar>(reference: &Matrix<T>, estimate: &Matrix<T>, peak: T) -> Result<T> {
    if reference.shape() != estimate.shape() {
        return Err(Error::DimensionMismatch {
            expected: reference.as_slice().len(),
            found: estimate.as_slice().len(),
        });
    }
    if !(peak > T::zero()) {
        return Err(Error::InvalidArgument("peak must be positive".into()));
    }
    psnr_slices(reference.as_slice(), estimate.as_slice(), peak)
}

pub(crate) fn psnr_slices<T: Scalar>(reference: &[T], estimate: &[T], peak: T) -> Result<T> {
    if reference.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mse = dist_sq(reference, estimate) / T::from_usize_lossy(reference.len());
    if mse == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (peak * peak / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_identical_is_infinite() {
        let a = Matrix::<f64>::identity(3);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_unit_error_is_zero_db() {
        let z = Matrix::<f64>::zeros(2, 3);
        let o = z.map(|_| 1.0);
        assert_eq!(psnr(&z, &o, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn psnr_single_pixel_error() {
        // MSE = 4 / 4 = 1
        let z = Matrix::<f64>::zeros(2, 2);
        let mut e = z.clone();
        e[(0, 0)] = 2.0;
        let v = psnr(&z, &e, 255.0).unwrap();
        assert!((v - 10.0 * (255.0f64 * 255.0).log10()).abs() < 1e-12);
        assert!((v - 48.13).abs() < 0.005);
    }

    #[test]
    fn psnr_rejects_bad_input() {
        let z = Matrix::<f64>::zeros(2, 2);
        assert!(psnr(&z, &Matrix::zeros(2, 3), 1.0).is_err());
        assert!(psnr(&z, &z, 0.0).is_err());
    }
}
