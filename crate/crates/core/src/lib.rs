//! Geometric manifold rectification (GMR) for imbalanced binary tabular
//! data.
//!
//! The pipeline estimates, for every training sample, an inverse-distance
//! weighted class vote over its `k` nearest neighbours ([`confidence`]),
//! then removes majority samples that are misclassified or ambiguous while
//! removing only a capped number of deeply embedded minority samples
//! ([`cleaner`]). [`baselines`] holds ENN, Tomek links and random
//! undersampling for comparison, and [`eval`] the metrics, experiments and
//! benchmark harness.
//!
//! ```
//! use gmr_core::{clean, generate_overlap, CleaningConfig, SyntheticSpec};
//!
//! let data = generate_overlap(&SyntheticSpec::separated(300, 30, 2, 1.0, 7)).unwrap();
//! let (cleaned, report) = clean(&data, &CleaningConfig::default()).unwrap();
//! assert!(cleaned.len() <= data.len());
//! assert!(report.removed_minority.len() <= 3);
//! ```

pub mod baselines;
pub mod cleaner;
pub mod confidence;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod rng;

pub use baselines::SamplerId;
pub use cleaner::{clean, removal_rates, CleaningConfig, CleaningReport};
pub use confidence::{ConfidenceTable, Epsilon};
pub use data::{
    generate_overlap, load_csv, stratified_split, CsvSchema, Dataset, LabelMapping, SplitSpec, SyntheticSpec,
};
pub use error::{Error, Result};
pub use eval::EvalResult;
pub use geometry::{Metric, NeighborSet, ResolvedMetric};
