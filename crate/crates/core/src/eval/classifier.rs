use crate::confidence::{weighted_votes, Epsilon};
use crate::data::Dataset;
use crate::error::Result;
use crate::geometry::{self, Metric, ResolvedMetric};

/// Minority score per test row: the inverse-distance weighted minority
/// vote over its `k` nearest training rows.
pub fn knn_classifier_scores(
    train: &Dataset,
    test: &Dataset,
    k: usize,
    metric: Metric,
    epsilon: Epsilon,
) -> Result<Vec<f64>> {
    knn_scores_resolved(
        train,
        test,
        k,
        geometry::select_metric(metric, train.n_features()),
        epsilon,
    )
}

pub fn knn_scores_resolved(
    train: &Dataset,
    test: &Dataset,
    k: usize,
    metric: ResolvedMetric,
    epsilon: Epsilon,
) -> Result<Vec<f64>> {
    train.ensure_both_classes()?;
    let neighbors = geometry::knn_query(train, test, k, metric)?;
    let eps = epsilon.value();
    Ok((0..test.len())
        .map(|i| {
            weighted_votes(
                neighbors.indices(i).iter().map(|&j| train.label(j)),
                neighbors.distances(i).iter().map(|&d| 1.0 / (d + eps)),
            )
            .1
        })
        .collect())
}
