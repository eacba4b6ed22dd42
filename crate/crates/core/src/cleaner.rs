//! Asymmetric cleaning: strict removal of intrusive or ambiguous majority
//! samples, conservative and capped removal of deeply embedded minority
//! samples.
//!
//! Confidence is estimated once on the input; removals never trigger
//! re-estimation. If every majority row meets the removal predicate, every
//! majority row is removed; no majority floor is applied.

use serde::{Deserialize, Serialize};

use crate::baselines::SamplerId;
use crate::confidence::{self, ConfidenceTable, Epsilon};
use crate::data::{imbalance_ratio, Dataset, MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::geometry::{self, Metric, ResolvedMetric, DEFAULT_DIM_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningConfig {
    /// Neighbourhood size.
    pub k: usize,
    /// Majority rows with same-class confidence below this are removed.
    pub alpha: f64,
    /// Minority rows need majority confidence above this to be candidates.
    pub beta: f64,
    /// At most `floor(gamma * |minority|)` minority rows are removed.
    pub gamma: f64,
    pub epsilon: Epsilon,
    pub metric: Metric,
    /// `Auto` switches to cosine above this feature dimension.
    pub dim_threshold: usize,
    /// Cleaning is skipped entirely below this many minority rows.
    pub scarcity_floor: usize,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            k: 15,
            alpha: 0.3,
            beta: 0.7,
            gamma: 0.1,
            epsilon: Epsilon::DEFAULT,
            metric: Metric::Auto,
            dim_threshold: DEFAULT_DIM_THRESHOLD,
            scarcity_floor: 10,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.beta < self.alpha {
            return Err(Error::InvalidConfig(format!(
                "beta ({}) must be >= alpha ({}): minority removal needs at least as much evidence as majority removal",
                self.beta, self.alpha
            )));
        }
        Epsilon::new(self.epsilon.value())?;
        Ok(())
    }

    pub fn resolved_metric(&self, dim: usize) -> ResolvedMetric {
        geometry::select_metric_with_threshold(self.metric, dim, self.dim_threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinorityCandidate {
    pub row_id: u64,
    pub maj_conf: f64,
}

/// Outcome of one sampler run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub sampler: SamplerId,
    pub n_majority_before: usize,
    pub n_minority_before: usize,
    /// Removed majority row ids, ascending.
    pub removed_majority: Vec<u64>,
    /// Removed minority row ids, ascending.
    pub removed_minority: Vec<u64>,
    pub r0: f64,
    pub r1: f64,
    pub ir_before: Option<f64>,
    /// `None` when no minority rows remain.
    pub ir_after: Option<f64>,
    pub skipped_scarcity: bool,
    /// Minority candidates in removal order, before the cap is applied.
    pub minority_candidates: Vec<MinorityCandidate>,
    /// Metric actually used, when the sampler measures distances.
    pub metric: Option<ResolvedMetric>,
}

impl CleaningReport {
    /// Fills counts and rates from the row ids each class lost.
    pub(crate) fn new(
        sampler: SamplerId,
        data: &Dataset,
        mut removed_majority: Vec<u64>,
        mut removed_minority: Vec<u64>,
    ) -> Self {
        removed_majority.sort_unstable();
        removed_minority.sort_unstable();
        let (n_maj, n_min) = data.class_counts();
        let rate = |removed: usize, total: usize| if total == 0 { 0.0 } else { removed as f64 / total as f64 };
        Self {
            sampler,
            n_majority_before: n_maj,
            n_minority_before: n_min,
            r0: rate(removed_majority.len(), n_maj),
            r1: rate(removed_minority.len(), n_min),
            ir_before: imbalance_ratio(n_maj, n_min),
            ir_after: imbalance_ratio(n_maj - removed_majority.len(), n_min - removed_minority.len()),
            removed_majority,
            removed_minority,
            skipped_scarcity: false,
            minority_candidates: Vec::new(),
            metric: None,
        }
    }

    pub fn n_removed(&self) -> usize {
        self.removed_majority.len() + self.removed_minority.len()
    }

    /// Formats removal counts, rates and imbalance ratios on one line.
    pub fn summary_line(&self) -> String {
        let ir = |v: Option<f64>| v.map_or_else(|| "inf".to_owned(), |x| format!("{x:.4}"));
        format!(
            "{}: removed majority={} minority={} r0={:.4} r1={:.4} IR {} -> {}{}",
            self.sampler.name(),
            self.removed_majority.len(),
            self.removed_minority.len(),
            self.r0,
            self.r1,
            ir(self.ir_before),
            ir(self.ir_after),
            if self.skipped_scarcity {
                " (skipped: minority below scarcity floor)"
            } else {
                ""
            }
        )
    }
}

/// Class-conditional removal rates `(r0, r1)`.
pub fn removal_rates(report: &CleaningReport) -> (f64, f64) {
    (report.r0, report.r1)
}

/// Confidence table for `data` under `config`, with the metric it used.
pub fn confidence_table(data: &Dataset, config: &CleaningConfig) -> Result<(ConfidenceTable, ResolvedMetric)> {
    let metric = config.resolved_metric(data.n_features());
    let neighbors = geometry::knn_all(data, config.k, metric)?;
    Ok((confidence::estimate(data, &neighbors, config.epsilon)?, metric))
}

/// Runs one cleaning pass and returns the cleaned dataset (original order)
/// with its report.
pub fn clean(data: &Dataset, config: &CleaningConfig) -> Result<(Dataset, CleaningReport)> {
    config.validate()?;
    data.ensure_both_classes()?;
    let (_, n_min) = data.class_counts();
    if n_min < config.scarcity_floor {
        let mut report = CleaningReport::new(SamplerId::Gmr, data, Vec::new(), Vec::new());
        report.skipped_scarcity = true;
        return Ok((data.clone(), report));
    }
    if data.len() <= config.k {
        return Err(Error::TooFewSamples {
            required: config.k + 1,
            actual: data.len(),
        });
    }

    let (table, metric) = confidence_table(data, config)?;
    let ids = data.row_ids();

    let mut removed = vec![false; data.len()];
    let mut candidates = Vec::new();
    for (i, c) in table.rows().iter().enumerate() {
        match data.label(i) {
            MAJORITY => removed[i] = c.predicted == MINORITY || c.self_conf < config.alpha,
            _ => {
                if c.predicted == MAJORITY && c.maj_conf > config.beta {
                    candidates.push((i, c.maj_conf));
                }
            }
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(ids[a.0].cmp(&ids[b.0])));
    let budget = (config.gamma * n_min as f64).floor() as usize;
    for &(i, _) in candidates.iter().take(budget) {
        removed[i] = true;
    }

    let (mut removed_majority, mut removed_minority) = (Vec::new(), Vec::new());
    for i in (0..data.len()).filter(|&i| removed[i]) {
        if data.label(i) == MINORITY {
            removed_minority.push(ids[i]);
        } else {
            removed_majority.push(ids[i]);
        }
    }
    let mut report = CleaningReport::new(SamplerId::Gmr, data, removed_majority, removed_minority);
    report.minority_candidates = candidates
        .iter()
        .map(|&(i, maj_conf)| MinorityCandidate {
            row_id: ids[i],
            maj_conf,
        })
        .collect();
    report.metric = Some(metric);
    Ok((data.retain_positions(|i| !removed[i]), report))
}
