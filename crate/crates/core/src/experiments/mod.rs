//! Desk-scale versions of the stability, generalization and compressed
//! recovery protocols. Every experiment is driven by one top-level seed and
//! reduces trial results in index order, so reruns are byte-identical.

mod difference;
mod generalization;
mod recovery;
mod stability;

pub use difference::{assignment, dictionary_difference, level_difference, DictionaryDifference};
pub use generalization::{
    generalization_experiment, GeneralizationConfig, GeneralizationReport, LevelCurvePoint,
    MseRow, RoundsPoint,
};
pub use recovery::{
    compressed_recovery, MeasurementEnsemble, ProjectedDictionary, RecoveryResult,
};
pub use stability::{stability_experiment, SampleSource, StabilityConfig, StabilityReport, StabilityRow};
