//! Reference undersamplers: Wilson editing (ENN), Tomek links, random
//! undersampling, and a no-op.
//!
//! ENN and Tomek edit the majority class only; minority rows are never
//! removed by either.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cleaner::{self, CleaningConfig, CleaningReport};
use crate::data::{Dataset, MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::geometry::{self, Metric, ResolvedMetric};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SamplerId {
    None,
    #[serde(rename = "GMR")]
    Gmr,
    #[serde(rename = "ENN")]
    Enn,
    Tomek,
    #[serde(rename = "RUS")]
    Rus,
}

impl SamplerId {
    pub const ALL: [SamplerId; 5] = [
        SamplerId::None,
        SamplerId::Gmr,
        SamplerId::Enn,
        SamplerId::Tomek,
        SamplerId::Rus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerId::None => "None",
            SamplerId::Gmr => "GMR",
            SamplerId::Enn => "ENN",
            SamplerId::Tomek => "Tomek",
            SamplerId::Rus => "RUS",
        }
    }

    /// Applies the sampler. `config` supplies `k` and the metric for the
    /// neighbourhood-based methods; `seed` drives RUS.
    pub fn apply(self, data: &Dataset, config: &CleaningConfig, seed: u64) -> Result<(Dataset, CleaningReport)> {
        let metric = config.resolved_metric(data.n_features());
        match self {
            SamplerId::None => none(data),
            SamplerId::Gmr => cleaner::clean(data, config),
            SamplerId::Enn => enn_resolved(data, config.k, metric),
            SamplerId::Tomek => tomek_resolved(data, metric),
            SamplerId::Rus => rus(data, seed),
        }
    }
}

impl std::fmt::Display for SamplerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SamplerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidConfig(format!("unknown sampler `{s}` (expected None, GMR, ENN, Tomek or RUS)"))
            })
    }
}

fn removal_report(sampler: SamplerId, data: &Dataset, removed: &[bool]) -> CleaningReport {
    let ids = data.row_ids();
    let (mut maj, mut min) = (Vec::new(), Vec::new());
    for i in (0..data.len()).filter(|&i| removed[i]) {
        if data.label(i) == MINORITY {
            min.push(ids[i]);
        } else {
            maj.push(ids[i]);
        }
    }
    CleaningReport::new(sampler, data, maj, min)
}

pub fn none(data: &Dataset) -> Result<(Dataset, CleaningReport)> {
    Ok((
        data.clone(),
        CleaningReport::new(SamplerId::None, data, Vec::new(), Vec::new()),
    ))
}

/// Removes each majority row whose unweighted k-NN vote (self excluded)
/// favours the minority class strictly; ties keep the row.
pub fn enn(data: &Dataset, k: usize, metric: Metric) -> Result<(Dataset, CleaningReport)> {
    enn_resolved(data, k, geometry::select_metric(metric, data.n_features()))
}

fn enn_resolved(data: &Dataset, k: usize, metric: ResolvedMetric) -> Result<(Dataset, CleaningReport)> {
    data.ensure_both_classes()?;
    let neighbors = geometry::knn_all(data, k, metric)?;
    let removed: Vec<bool> = (0..data.len())
        .map(|i| {
            if data.label(i) != MAJORITY {
                return false;
            }
            let minority = neighbors
                .indices(i)
                .iter()
                .filter(|&&j| data.label(j) == MINORITY)
                .count();
            minority > k - minority
        })
        .collect();
    let mut report = removal_report(SamplerId::Enn, data, &removed);
    report.metric = Some(metric);
    Ok((data.retain_positions(|i| !removed[i]), report))
}

/// Removes the majority member of every Tomek link (mutual nearest
/// neighbours with opposite labels).
pub fn tomek(data: &Dataset, metric: Metric) -> Result<(Dataset, CleaningReport)> {
    tomek_resolved(data, geometry::select_metric(metric, data.n_features()))
}

fn tomek_resolved(data: &Dataset, metric: ResolvedMetric) -> Result<(Dataset, CleaningReport)> {
    data.ensure_both_classes()?;
    let nn = geometry::knn_all(data, 1, metric)?;
    let nearest = |i: usize| nn.indices(i)[0];
    let removed: Vec<bool> = (0..data.len())
        .map(|i| {
            let j = nearest(i);
            data.label(i) == MAJORITY && data.label(j) == MINORITY && nearest(j) == i
        })
        .collect();
    let mut report = removal_report(SamplerId::Tomek, data, &removed);
    report.metric = Some(metric);
    Ok((data.retain_positions(|i| !removed[i]), report))
}

/// Keeps a seeded uniform subset of `min(|majority|, |minority|)` majority
/// rows and every minority row, in original order.
pub fn rus(data: &Dataset, seed: u64) -> Result<(Dataset, CleaningReport)> {
    data.ensure_both_classes()?;
    let (n_maj, n_min) = data.class_counts();
    let mut majority: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == MAJORITY).collect();
    majority.shuffle(&mut rng::seeded(seed));
    let mut removed = vec![false; data.len()];
    for &i in &majority[n_maj.min(n_min)..] {
        removed[i] = true;
    }
    let report = removal_report(SamplerId::Rus, data, &removed);
    Ok((data.retain_positions(|i| !removed[i]), report))
}
