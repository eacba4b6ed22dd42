//! Evaluation: a built-in kNN scorer, AUPRC and asymmetric risk, the
//! posterior-shift and variance-reduction experiments, and the
//! split/clean/score/rank benchmark harness.

mod bench;
mod classifier;
mod metrics;
mod posterior;
mod variance;

pub use bench::{
    average_ranks, run_benchmark, run_benchmark_observed, synthetic_suite, CellResult, CellTrace, DatasetSummary,
    EvalResult, NamedDataset, SamplerSummary, DEFAULT_SEEDS, DEFAULT_TEST_FRACTION,
};
pub use classifier::{knn_classifier_scores, knn_scores_resolved};
pub use metrics::{auprc, compute_asymmetric_risk, CostMatrix};
pub use posterior::{
    cleaned_posterior, posterior_shift_experiment, uncleaned_posterior, PosteriorShiftInput, PosteriorShiftSummary,
    SeedShift, OVERLAP_HIGH, OVERLAP_LOW,
};
pub use variance::{variance_reduction_experiment, LabelModel, NoiseModel, VarianceResult, VarianceSetup};
