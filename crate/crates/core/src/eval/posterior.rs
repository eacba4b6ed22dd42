//! How class-conditional removal moves the local minority posterior.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;

use crate::cleaner::{self, CleaningConfig};
use crate::data::{self, Dataset, SyntheticSpec, MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::rng;

use super::classifier::knn_scores_resolved;

/// Overlap region bounds on the true minority posterior (exclusive).
pub const OVERLAP_LOW: f64 = 0.3;
pub const OVERLAP_HIGH: f64 = 0.7;

const PROBE_STREAM: u64 = 0x7072_6f62;
const CONTROL_STREAM: u64 = 0x6374_726c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorShiftInput {
    /// Imbalance ratio `|majority| / |minority|`.
    pub ir: f64,
    pub r0: f64,
    pub r1: f64,
    /// Local posteriors `(p0, p1)`; when absent the local class ratio is
    /// taken to equal `ir`.
    pub local: Option<(f64, f64)>,
}

impl PosteriorShiftInput {
    pub fn from_ir(ir: f64, r0: f64, r1: f64) -> Self {
        Self {
            ir,
            r0,
            r1,
            local: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.ir > 0.0 && self.ir.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "imbalance ratio must be positive, got {}",
                self.ir
            )));
        }
        for (name, r) in [("r0", self.r0), ("r1", self.r1)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1), got {r}")));
            }
        }
        if let Some((p0, p1)) = self.local {
            if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) || (p0 + p1 - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "local posteriors must lie in [0, 1] and sum to 1, got ({p0}, {p1})"
                )));
            }
        }
        Ok(())
    }
}

/// Minority posterior after removing each class at its rate `r_c`:
/// `p1 (1-r1) / (p1 (1-r1) + p0 (1-r0))`, or with the ratio form
/// `(1-r1) / (IR (1-r0) + (1-r1))` when no local posteriors are given.
pub fn cleaned_posterior(input: &PosteriorShiftInput) -> Result<f64> {
    input.validate()?;
    let kept_1 = 1.0 - input.r1;
    let kept_0 = 1.0 - input.r0;
    Ok(match input.local {
        Some((p0, p1)) => p1 * kept_1 / (p1 * kept_1 + p0 * kept_0),
        None => kept_1 / (input.ir * kept_0 + kept_1),
    })
}

/// `1 / (1 + IR)`: the ratio-form posterior with nothing removed.
pub fn uncleaned_posterior(ir: f64) -> f64 {
    1.0 / (1.0 + ir)
}

/// One seed of [`posterior_shift_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedShift {
    pub seed: u64,
    /// Probe points whose true posterior lies in the overlap region.
    pub n_overlap_probes: usize,
    /// Training majority rows inside the overlap region.
    pub n_overlap_majority: usize,
    pub before: f64,
    pub after_gmr: f64,
    pub delta_gmr: f64,
    pub after_control: f64,
    pub delta_control: f64,
    pub r0: f64,
    pub r1: f64,
    /// Majority removal rate restricted to the overlap region.
    pub r0_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorShiftSummary {
    pub seeds: Vec<SeedShift>,
    /// Seeds dropped because no probe fell in the overlap region.
    pub empty_overlap_seeds: Vec<u64>,
    pub mean_before: f64,
    pub mean_after_gmr: f64,
    pub mean_delta_gmr: f64,
    pub mean_delta_control: f64,
    pub fraction_positive: f64,
    pub mean_r0: f64,
    pub mean_r1: f64,
    /// Mean of `r0_overlap / r0` over seeds where both are defined.
    pub mean_overlap_concentration: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Removes `round(rate * |class|)` random rows from each class.
fn symmetric_random_removal(data: &Dataset, rate: f64, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let mut removed = vec![false; data.len()];
    for class in [MAJORITY, MINORITY] {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        let n = (rate * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..n.min(members.len())] {
            removed[i] = true;
        }
    }
    data.retain_positions(|i| !removed[i])
}

/// Measures the mean estimated minority posterior in the overlap region
/// before and after cleaning, against a control that removes the same
/// overall fraction of rows from both classes at random.
///
/// Per seed, a training set and an independent probe set are drawn from
/// `spec`; probes whose closed-form posterior lies strictly inside
/// `(0.3, 0.7)` are scored with the inverse-distance kNN vote (`config.k`,
/// `config.epsilon`) against the original, GMR-cleaned, and control
/// training sets.
pub fn posterior_shift_experiment(
    spec: &SyntheticSpec,
    config: &CleaningConfig,
    n_seeds: usize,
) -> Result<PosteriorShiftSummary> {
    config.validate()?;
    spec.validate()?;
    if n_seeds == 0 {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    let in_overlap = |x: &[f64]| {
        let p = spec.true_posterior(x);
        OVERLAP_LOW < p && p < OVERLAP_HIGH
    };
    let mut seeds = Vec::with_capacity(n_seeds);
    let mut empty = Vec::new();
    for s in 0..n_seeds as u64 {
        let seed = rng::derive_seed(spec.seed, s);
        let train = data::generate_overlap(&SyntheticSpec { seed, ..spec.clone() })?;
        let probes = data::generate_overlap(&SyntheticSpec {
            seed: rng::derive_seed(seed, PROBE_STREAM),
            ..spec.clone()
        })?;
        let probes = probes.retain_positions(|i| in_overlap(probes.row(i)));
        if probes.is_empty() {
            empty.push(seed);
            continue;
        }
        let metric = config.resolved_metric(train.n_features());
        let mean_score = |reference: &Dataset| -> Result<f64> {
            let scores = knn_scores_resolved(reference, &probes, config.k, metric, config.epsilon)?;
            Ok(mean(scores.into_iter()))
        };

        let (cleaned, report) = cleaner::clean(&train, config)?;
        let overall_rate = report.n_removed() as f64 / train.len() as f64;
        let control = symmetric_random_removal(&train, overall_rate, rng::derive_seed(seed, CONTROL_STREAM));

        let overlap_majority: Vec<u64> = (0..train.len())
            .filter(|&i| train.label(i) == MAJORITY && in_overlap(train.row(i)))
            .map(|i| train.row_ids()[i])
            .collect();
        let removed_in_overlap = overlap_majority
            .iter()
            .filter(|id| report.removed_majority.binary_search(id).is_ok())
            .count();

        let before = mean_score(&train)?;
        let after_gmr = mean_score(&cleaned)?;
        let after_control = mean_score(&control)?;
        seeds.push(SeedShift {
            seed,
            n_overlap_probes: probes.len(),
            n_overlap_majority: overlap_majority.len(),
            before,
            after_gmr,
            delta_gmr: after_gmr - before,
            after_control,
            delta_control: after_control - before,
            r0: report.r0,
            r1: report.r1,
            r0_overlap: (!overlap_majority.is_empty())
                .then(|| removed_in_overlap as f64 / overlap_majority.len() as f64),
        });
    }
    if seeds.is_empty() {
        return Err(Error::InvalidInput(
            "no probe point fell inside the overlap region for any seed; the classes are too well separated".into(),
        ));
    }
    let concentration: Vec<f64> = seeds
        .iter()
        .filter_map(|s| s.r0_overlap.filter(|_| s.r0 > 0.0).map(|ro| ro / s.r0))
        .collect();
    Ok(PosteriorShiftSummary {
        mean_before: mean(seeds.iter().map(|s| s.before)),
        mean_after_gmr: mean(seeds.iter().map(|s| s.after_gmr)),
        mean_delta_gmr: mean(seeds.iter().map(|s| s.delta_gmr)),
        mean_delta_control: mean(seeds.iter().map(|s| s.delta_control)),
        fraction_positive: seeds.iter().filter(|s| s.delta_gmr > 0.0).count() as f64 / seeds.len() as f64,
        mean_r0: mean(seeds.iter().map(|s| s.r0)),
        mean_r1: mean(seeds.iter().map(|s| s.r1)),
        mean_overlap_concentration: (!concentration.is_empty()).then(|| mean(concentration.into_iter())),
        empty_overlap_seeds: empty,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let p = cleaned_posterior(&PosteriorShiftInput::from_ir(10.0, 0.2, 0.05)).unwrap();
        assert!((p - 0.95 / 8.95).abs() < 1e-15);
        assert!((p - 0.106).abs() < 0.0005);
        let p = cleaned_posterior(&PosteriorShiftInput::from_ir(20.0, 0.3, 0.05)).unwrap();
        assert!((p - 0.95 / 14.95).abs() < 1e-15);
        assert!((p - 0.0635).abs() < 0.0005);
    }

    #[test]
    fn no_removal_is_identity() {
        for ir in [0.5, 1.0, 7.0, 100.0] {
            let p = cleaned_posterior(&PosteriorShiftInput::from_ir(ir, 0.0, 0.0)).unwrap();
            assert!((p - uncleaned_posterior(ir)).abs() < 1e-15);
        }
    }

    #[test]
    fn local_form() {
        let input = PosteriorShiftInput {
            ir: 10.0,
            r0: 0.5,
            r1: 0.0,
            local: Some((0.8, 0.2)),
        };
        let p = cleaned_posterior(&input).unwrap();
        assert!((p - 0.2 / (0.2 + 0.4)).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(cleaned_posterior(&PosteriorShiftInput::from_ir(10.0, 1.0, 0.0)).is_err());
        assert!(cleaned_posterior(&PosteriorShiftInput::from_ir(0.0, 0.1, 0.0)).is_err());
        let bad = PosteriorShiftInput {
            local: Some((0.5, 0.6)),
            ..PosteriorShiftInput::from_ir(1.0, 0.1, 0.1)
        };
        assert!(cleaned_posterior(&bad).is_err());
    }

    #[test]
    fn separated_classes_have_no_overlap() {
        let spec = SyntheticSpec::separated(200, 20, 2, 10.0, 1);
        let err = posterior_shift_experiment(&spec, &CleaningConfig::default(), 3).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn symmetric_removal_rates() {
        let d = data::generate_overlap(&SyntheticSpec::separated(100, 20, 2, 1.0, 0)).unwrap();
        let out = symmetric_random_removal(&d, 0.1, 3);
        assert_eq!(out.class_counts(), (90, 18));
    }
}
