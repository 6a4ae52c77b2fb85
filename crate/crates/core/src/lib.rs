//! Multilevel dictionary learning for sparse representations.
//!
//! A multilevel dictionary is a stack of sub-dictionaries, one per level,
//! each learned by K-hyperline clustering on the residuals left by the
//! levels above it. Every level contributes exactly one atom to a sample's
//! code, so encoding is a sequence of correlate-and-max steps.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what file formats, experiments
//! and the command-line tool use.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod error;
pub mod experiments;
pub mod io;
pub mod khyperline;
pub mod mld;
pub mod numerics;
pub mod pursuit;
pub mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use khyperline::{Clustering, ClusteringConfig};
pub use mld::{MdlConfig, MultilevelDictionary, RobustMultilevelDictionary, TrainingTrace};

pub use numerics::{Matrix, RngSeed};
pub use pursuit::{EnsembleCode, SparseCode};

pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Clustering64 = Clustering<f64>;
pub type Dictionary64 = MultilevelDictionary<f64>;
pub type Dictionary32 = MultilevelDictionary<f32>;
pub type RobustDictionary64 = RobustMultilevelDictionary<f64>;
pub type SparseCode64 = SparseCode<f64>;
pub type EnsembleCode64 = EnsembleCode<f64>;
