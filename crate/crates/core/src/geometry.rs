//! Distances, dimension-adaptive metric choice, and exact all-points kNN.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Feature dimension at or below which `Auto` means Euclidean.
pub const DEFAULT_DIM_THRESHOLD: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Cosine,
    #[default]
    Auto,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
            Metric::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            "auto" => Ok(Metric::Auto),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric `{other}` (expected auto, euclidean or cosine)"
            ))),
        }
    }
}

/// A metric with `Auto` already resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolvedMetric {
    Euclidean,
    Cosine,
}

impl ResolvedMetric {
    pub fn name(self) -> &'static str {
        match self {
            ResolvedMetric::Euclidean => "euclidean",
            ResolvedMetric::Cosine => "cosine",
        }
    }
}

pub fn select_metric(metric: Metric, dim: usize) -> ResolvedMetric {
    select_metric_with_threshold(metric, dim, DEFAULT_DIM_THRESHOLD)
}

/// `Auto` becomes Euclidean for `dim <= threshold` and cosine above it.
pub fn select_metric_with_threshold(metric: Metric, dim: usize, threshold: usize) -> ResolvedMetric {
    match metric {
        Metric::Euclidean => ResolvedMetric::Euclidean,
        Metric::Cosine => ResolvedMetric::Cosine,
        Metric::Auto if dim <= threshold => ResolvedMetric::Euclidean,
        Metric::Auto => ResolvedMetric::Cosine,
    }
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine distance from precomputed norms. A zero vector has similarity 0
/// with everything, i.e. distance 1.
#[inline]
fn cosine_with_norms(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    let denom = na * nb;
    if denom == 0.0 {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot / denom).clamp(0.0, 2.0)
}

/// Euclidean `||a - b||` or cosine `1 - a.b / (|a||b|)` (range `[0, 2]`).
pub fn distance(a: &[f64], b: &[f64], metric: ResolvedMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(match metric {
        ResolvedMetric::Euclidean => euclidean(a, b),
        ResolvedMetric::Cosine => cosine_with_norms(a, b, norm(a), norm(b)),
    })
}

/// Orders `(distance, index)` pairs by distance, then index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// `k` nearest neighbours per query row, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborSet {
    /// Builds a set from per-row flat arrays of length `n_rows * k`.
    pub fn from_parts(k: usize, indices: Vec<usize>, distances: Vec<f64>) -> Result<Self> {
        if indices.len() != distances.len() || (k > 0 && !indices.len().is_multiple_of(k)) {
            return Err(Error::InvalidInput("neighbor arrays do not form whole rows".into()));
        }
        Ok(Self { k, indices, distances })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn indices(&self, row: usize) -> &[usize] {
        &self.indices[row * self.k..(row + 1) * self.k]
    }

    pub fn distances(&self, row: usize) -> &[f64] {
        &self.distances[row * self.k..(row + 1) * self.k]
    }
}

/// Row-major point set with cached norms for the chosen metric.
struct PointSet<'a> {
    data: &'a Dataset,
    metric: ResolvedMetric,
    norms: Vec<f64>,
}

impl<'a> PointSet<'a> {
    fn new(data: &'a Dataset, metric: ResolvedMetric) -> Self {
        let norms = match metric {
            ResolvedMetric::Cosine => data.rows().map(norm).collect(),
            ResolvedMetric::Euclidean => Vec::new(),
        };
        Self { data, metric, norms }
    }

    #[inline]
    fn distance_to(&self, query: &[f64], query_norm: f64, j: usize) -> f64 {
        match self.metric {
            ResolvedMetric::Euclidean => euclidean(query, self.data.row(j)),
            ResolvedMetric::Cosine => cosine_with_norms(query, self.data.row(j), query_norm, self.norms[j]),
        }
    }

    /// The `k` closest reference rows to `query`, skipping `exclude`.
    fn nearest(&self, query: &[f64], exclude: Option<usize>, k: usize, scratch: &mut Vec<(f64, usize)>) {
        let query_norm = match self.metric {
            ResolvedMetric::Cosine => norm(query),
            ResolvedMetric::Euclidean => 0.0,
        };
        scratch.clear();
        scratch.extend(
            (0..self.data.len())
                .filter(|&j| Some(j) != exclude)
                .map(|j| (self.distance_to(query, query_norm, j), j)),
        );
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k, by_distance_then_index);
            scratch.truncate(k);
        }
        scratch.sort_unstable_by(by_distance_then_index);
    }
}

/// Exact kNN of every row against the rest of `data` (self excluded).
///
/// Ties at equal distance go to the lower row position. Rows are processed
/// in parallel; the result does not depend on scheduling.
pub fn knn_all(data: &Dataset, k: usize, metric: ResolvedMetric) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if data.len() < k + 1 {
        return Err(Error::TooFewSamples {
            required: k + 1,
            actual: data.len(),
        });
    }
    let points = PointSet::new(data, metric);
    let rows: Vec<Vec<(f64, usize)>> = (0..data.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            points.nearest(data.row(i), Some(i), k, scratch);
            scratch.clone()
        })
        .collect();
    Ok(flatten(k, rows))
}

/// Exact kNN of each `queries` row among the rows of `reference`.
pub fn knn_query(reference: &Dataset, queries: &Dataset, k: usize, metric: ResolvedMetric) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if reference.len() < k {
        return Err(Error::TooFewSamples {
            required: k,
            actual: reference.len(),
        });
    }
    if reference.n_features() != queries.n_features() {
        return Err(Error::DimensionMismatch {
            expected: reference.n_features(),
            actual: queries.n_features(),
        });
    }
    let points = PointSet::new(reference, metric);
    let rows: Vec<Vec<(f64, usize)>> = (0..queries.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            points.nearest(queries.row(i), None, k, scratch);
            scratch.clone()
        })
        .collect();
    Ok(flatten(k, rows))
}

fn flatten(k: usize, rows: Vec<Vec<(f64, usize)>>) -> NeighborSet {
    let mut indices = Vec::with_capacity(rows.len() * k);
    let mut distances = Vec::with_capacity(rows.len() * k);
    for row in rows {
        for (d, j) in row {
            distances.push(d);
            indices.push(j);
        }
    }
    NeighborSet { k, indices, distances }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Dataset::from_rows(&rows, vec![0; xs.len()]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let e = ResolvedMetric::Euclidean;
        let c = ResolvedMetric::Cosine;
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], e).unwrap(), 5.0);
        assert!(distance(&[1.0, 2.0, -3.0], &[2.0, 4.0, -6.0], c).unwrap().abs() < 1e-12);
        assert!((distance(&[1.0, 0.0], &[0.0, 1.0], c).unwrap() - 1.0).abs() < 1e-15);
        assert!((distance(&[1.0, 0.0], &[-1.0, 0.0], c).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(distance(&[0.0, 0.0], &[1.0, 5.0], c).unwrap(), 1.0);
        assert!(matches!(
            distance(&[1.0], &[1.0, 2.0], e),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metric_selection_boundary() {
        assert_eq!(select_metric(Metric::Auto, 100), ResolvedMetric::Euclidean);
        assert_eq!(select_metric(Metric::Auto, 101), ResolvedMetric::Cosine);
        assert_eq!(select_metric(Metric::Cosine, 2), ResolvedMetric::Cosine);
        assert_eq!(select_metric(Metric::Euclidean, 5000), ResolvedMetric::Euclidean);
        assert_eq!(
            select_metric_with_threshold(Metric::Auto, 11, 10),
            ResolvedMetric::Cosine
        );
        assert_eq!("Cosine".parse::<Metric>().unwrap(), Metric::Cosine);
        assert!("manhattan".parse::<Metric>().is_err());
    }

    #[test]
    fn collinear_points() {
        let nn = knn_all(&line(&[0.0, 1.0, 3.0]), 1, ResolvedMetric::Euclidean).unwrap();
        assert_eq!(nn.indices(0), &[1]);
        assert_eq!(nn.indices(1), &[0]);
        assert_eq!(nn.indices(2), &[1]);
        assert_eq!(nn.distances(2), &[2.0]);
    }

    #[test]
    fn twins_never_include_self() {
        let nn = knn_all(&line(&[5.0, 5.0, 9.0]), 2, ResolvedMetric::Euclidean).unwrap();
        assert_eq!(nn.indices(0), &[1, 2]);
        assert_eq!(nn.indices(1), &[0, 2]);
        assert_eq!(nn.distances(0)[0], 0.0);
    }

    #[test]
    fn full_neighbourhood_covers_everyone() {
        let data = line(&[0.3, -1.0, 2.0, 7.5, 0.0]);
        let nn = knn_all(&data, 4, ResolvedMetric::Euclidean).unwrap();
        for i in 0..5 {
            let mut seen = nn.indices(i).to_vec();
            seen.sort_unstable();
            let expected: Vec<usize> = (0..5).filter(|&j| j != i).collect();
            assert_eq!(seen, expected);
            assert!(nn.distances(i).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn equidistant_ties_go_to_lower_index() {
        let nn = knn_all(&line(&[-1.0, 0.0, 1.0, 1.0]), 1, ResolvedMetric::Euclidean).unwrap();
        assert_eq!(nn.indices(1), &[0]);
        assert_eq!(nn.indices(2), &[3]);
    }

    #[test]
    fn too_few_rows() {
        let err = knn_all(&line(&[0.0, 1.0]), 2, ResolvedMetric::Euclidean).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { required: 3, actual: 2 }));
        assert!(knn_all(&line(&[0.0, 1.0]), 0, ResolvedMetric::Euclidean).is_err());
    }

    #[test]
    fn query_against_reference() {
        let reference = line(&[0.0, 10.0, 4.0]);
        let queries = line(&[3.0, 9.0]);
        let nn = knn_query(&reference, &queries, 2, ResolvedMetric::Euclidean).unwrap();
        assert_eq!(nn.indices(0), &[2, 0]);
        assert_eq!(nn.indices(1), &[1, 2]);
        assert!(knn_query(&reference, &queries, 4, ResolvedMetric::Euclidean).is_err());
    }
}
