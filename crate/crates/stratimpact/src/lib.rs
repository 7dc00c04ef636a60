//! Model-free feature impact and importance for regression datasets.
//!
//! The pipeline reads a feature's effect on the response directly from data:
//! a decision tree stratifies the rows on all *other* features, within-leaf
//! finite differences estimate the feature's local effect, the pieces merge
//! into a single partial-dependence curve, and the curve reduces to an
//! impact score (mean absolute effect over the feature's unique values) and
//! an importance score (the same, weighted by how often each value occurs).
//!
//! Everything downstream of a seed is deterministic: the same dataset, the
//! same parameters and the same seed produce bit-identical output, with or
//! without the `parallel` feature.

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod forest;
pub mod impact;
pub mod par;
pub mod pd;
pub mod rankers;
pub mod rng;
pub mod synth;

pub use dataset::{load_csv, Dataset, FeatureKind};
pub use error::{Error, Result};
pub use impact::{compute_all, FeatureScore, ImportanceReport};
pub use pd::StratParams;
