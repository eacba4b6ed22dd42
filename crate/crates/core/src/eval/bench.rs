//! Repeated stratified holdout: split, resample the training half, score
//! the untouched test half with the built-in kNN scorer, and rank samplers
//! by AUPRC.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::SamplerId;
use crate::cleaner::CleaningConfig;
use crate::data::{self, Dataset, SplitSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::rng;

use super::classifier::knn_scores_resolved;
use super::metrics::auprc;

pub const DEFAULT_SEEDS: [u64; 5] = [42, 0, 1, 2, 3];
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset {
    pub name: String,
    pub data: Dataset,
}

impl NamedDataset {
    pub fn new(name: impl Into<String>, data: Dataset) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }
}

/// AUPRC of one (dataset, seed, sampler column) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub seed: u64,
    /// Position of the sampler in the requested list.
    pub column: usize,
    pub sampler: SamplerId,
    /// `None` when the sampler or scorer failed on this cell.
    pub auprc: Option<f64>,
    pub error: Option<String>,
    /// Rank within its (dataset, seed) group; 1 is best.
    pub rank: Option<f64>,
    pub n_train_before: usize,
    pub n_train_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub column: usize,
    pub sampler: SamplerId,
    pub mean_auprc: Option<f64>,
    pub std_auprc: Option<f64>,
    pub mean_rank: Option<f64>,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub column: usize,
    pub sampler: SamplerId,
    pub mean_auprc: Option<f64>,
    pub std_auprc: Option<f64>,
    pub avg_rank: Option<f64>,
    pub n_cells: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub datasets: Vec<String>,
    pub samplers: Vec<SamplerId>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub classifier_k: usize,
    /// Sorted by (dataset position, seed position, column).
    pub cells: Vec<CellResult>,
    pub per_dataset: Vec<DatasetSummary>,
    pub summary: Vec<SamplerSummary>,
}

/// Row ids seen at each stage of one cell, for isolation audits.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub dataset: String,
    pub seed: u64,
    pub sampler: SamplerId,
    pub train_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
    /// Rows the scorer was fitted on (after resampling).
    pub fitted_ids: Vec<u64>,
}

/// Average 1-based ranks, highest value first; equal values share the
/// mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| values[i] == v).count();
        // Positions start..end hold ranks start+1..=end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Population mean and standard deviation.
fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

struct CellOutcome {
    result: CellResult,
    trace: CellTrace,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    dataset: &NamedDataset,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
    column: usize,
    sampler: SamplerId,
    config: &CleaningConfig,
    classifier_k: usize,
) -> CellOutcome {
    let metric = config.resolved_metric(train.n_features());
    let outcome = sampler.apply(train, config, seed).and_then(|(fitted, _)| {
        let scores = knn_scores_resolved(&fitted, test, classifier_k, metric, config.epsilon)?;
        Ok((auprc(&scores, test.labels())?, fitted))
    });
    let (auprc, error, fitted_ids, n_after) = match outcome {
        Ok((value, fitted)) => (Some(value), None, fitted.row_ids().to_vec(), fitted.len()),
        Err(e) => (None, Some(e.to_string()), Vec::new(), 0),
    };
    CellOutcome {
        result: CellResult {
            dataset: dataset.name.clone(),
            seed,
            column,
            sampler,
            auprc,
            error,
            rank: None,
            n_train_before: train.len(),
            n_train_after: n_after,
        },
        trace: CellTrace {
            dataset: dataset.name.clone(),
            seed,
            sampler,
            train_ids: train.row_ids().to_vec(),
            test_ids: test.row_ids().to_vec(),
            fitted_ids,
        },
    }
}

pub fn run_benchmark(
    datasets: &[NamedDataset],
    samplers: &[SamplerId],
    seeds: &[u64],
    config: &CleaningConfig,
    classifier_k: usize,
) -> Result<EvalResult> {
    run_benchmark_observed(datasets, samplers, seeds, config, classifier_k, |_| {})
}

/// [`run_benchmark`], reporting every cell's row-id trace to `observe` in
/// result order.
///
/// Samplers only ever receive the training half of a split. A sampler or
/// scoring failure leaves a `None` cell that is left out of that group's
/// ranking. Splitting failures abort the run.
pub fn run_benchmark_observed(
    datasets: &[NamedDataset],
    samplers: &[SamplerId],
    seeds: &[u64],
    config: &CleaningConfig,
    classifier_k: usize,
    mut observe: impl FnMut(&CellTrace),
) -> Result<EvalResult> {
    if datasets.is_empty() || samplers.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "benchmark needs at least one dataset, sampler and seed".into(),
        ));
    }
    config.validate()?;
    if classifier_k == 0 {
        return Err(Error::InvalidConfig("classifier k must be at least 1".into()));
    }
    let names: HashSet<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    if names.len() != datasets.len() {
        return Err(Error::InvalidInput("dataset names must be unique".into()));
    }

    let mut splits = Vec::with_capacity(datasets.len() * seeds.len());
    for ds in datasets {
        for &seed in seeds {
            let (train, test) = data::stratified_split(&ds.data, &SplitSpec::new(DEFAULT_TEST_FRACTION, seed))
                .map_err(|e| Error::InvalidInput(format!("dataset `{}`, seed {seed}: {e}", ds.name)))?;
            splits.push((ds, seed, train, test));
        }
    }

    let tasks: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|s| (0..samplers.len()).map(move |c| (s, c)))
        .collect();
    let outcomes: Vec<CellOutcome> = tasks
        .par_iter()
        .map(|&(s, c)| {
            let (ds, seed, train, test) = &splits[s];
            run_cell(ds, train, test, *seed, c, samplers[c], config, classifier_k)
        })
        .collect();

    let mut cells = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        observe(&outcome.trace);
        cells.push(outcome.result);
    }

    for group in cells.chunks_mut(samplers.len()) {
        let present: Vec<usize> = (0..group.len()).filter(|&i| group[i].auprc.is_some()).collect();
        let values: Vec<f64> = present.iter().map(|&i| group[i].auprc.unwrap_or_default()).collect();
        for (&i, r) in present.iter().zip(average_ranks(&values)) {
            group[i].rank = Some(r);
        }
    }

    let mut per_dataset = Vec::new();
    for ds in datasets {
        for (column, &sampler) in samplers.iter().enumerate() {
            let mine: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.dataset == ds.name && c.column == column)
                .collect();
            let values: Vec<f64> = mine.iter().filter_map(|c| c.auprc).collect();
            let ranks: Vec<f64> = mine.iter().filter_map(|c| c.rank).collect();
            let (mean_auprc, std_auprc) = mean_std(&values);
            per_dataset.push(DatasetSummary {
                dataset: ds.name.clone(),
                column,
                sampler,
                mean_auprc,
                std_auprc,
                mean_rank: mean_std(&ranks).0,
                n_cells: values.len(),
            });
        }
    }

    let summary = samplers
        .iter()
        .enumerate()
        .map(|(column, &sampler)| {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.column == column).collect();
            let values: Vec<f64> = mine.iter().filter_map(|c| c.auprc).collect();
            let ranks: Vec<f64> = mine.iter().filter_map(|c| c.rank).collect();
            let (mean_auprc, std_auprc) = mean_std(&values);
            SamplerSummary {
                column,
                sampler,
                mean_auprc,
                std_auprc,
                avg_rank: mean_std(&ranks).0,
                n_cells: values.len(),
                n_failed: mine.len() - values.len(),
            }
        })
        .collect();

    Ok(EvalResult {
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        samplers: samplers.to_vec(),
        seeds: seeds.to_vec(),
        test_fraction: DEFAULT_TEST_FRACTION,
        classifier_k,
        cells,
        per_dataset,
        summary,
    })
}

impl EvalResult {
    pub fn sampler_summary(&self, sampler: SamplerId) -> Option<&SamplerSummary> {
        self.summary.iter().find(|s| s.sampler == sampler)
    }

    pub fn dataset_summary(&self, dataset: &str, sampler: SamplerId) -> Option<&DatasetSummary> {
        self.per_dataset
            .iter()
            .find(|s| s.dataset == dataset && s.sampler == sampler)
    }

    /// Rank table: one row per sampler column, best average rank first.
    pub fn write_rank_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<&SamplerSummary> = self.summary.iter().collect();
        rows.sort_by(|a, b| match (a.avg_rank, b.avg_rank) {
            (Some(x), Some(y)) => x.total_cmp(&y).then(a.column.cmp(&b.column)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.column.cmp(&b.column),
        });
        let opt = |v: Option<f64>| v.map(data::format_f64).unwrap_or_default();
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["method", "avg_rank", "mean_auprc", "std_auprc", "n_cells", "n_failed"])?;
        for s in rows {
            wtr.write_record([
                s.sampler.name().to_owned(),
                opt(s.avg_rank),
                opt(s.mean_auprc),
                opt(s.std_auprc),
                s.n_cells.to_string(),
                s.n_failed.to_string(),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })?;
        Ok(())
    }
}

/// `n` two-Gaussian datasets of varying imbalance, separation, and
/// dimension, all with substantial class overlap.
///
/// Dataset `i` has 40 minority rows, imbalance ratio 5, 10 or 20, means
/// 1.0 to 1.75 standard deviations apart, and 2 to 5 features.
pub fn synthetic_suite(n: usize, base_seed: u64) -> Result<Vec<NamedDataset>> {
    (0..n)
        .map(|i| {
            let ratio = [5, 10, 20][i % 3];
            let separation = 1.0 + 0.25 * (i % 4) as f64;
            let dim = 2 + (i % 4);
            let n_minority = 40;
            let spec = SyntheticSpec::separated(
                ratio * n_minority,
                n_minority,
                dim,
                separation,
                rng::derive_seed(base_seed, i as u64),
            );
            let name = format!("synth{i:02}_ir{ratio}_sep{separation:.2}_d{dim}");
            Ok(NamedDataset::new(name, data::generate_overlap(&spec)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_ties_average() {
        assert_eq!(average_ranks(&[0.5, 0.9, 0.5, 0.1]), vec![2.5, 1.0, 2.5, 4.0]);
        assert_eq!(average_ranks(&[0.3, 0.3, 0.3]), vec![2.0, 2.0, 2.0]);
        assert!(average_ranks(&[]).is_empty());
    }

    #[test]
    fn single_sampler_ranks_first() {
        let suite = synthetic_suite(2, 0).unwrap();
        let r = run_benchmark(&suite, &[SamplerId::None], &[1, 2], &CleaningConfig::default(), 5).unwrap();
        assert!(r.cells.iter().all(|c| c.rank == Some(1.0)));
        assert_eq!(r.summary[0].avg_rank, Some(1.0));
    }

    #[test]
    fn duplicate_sampler_ties() {
        let suite = synthetic_suite(1, 3).unwrap();
        let r = run_benchmark(
            &suite,
            &[SamplerId::Gmr, SamplerId::Gmr],
            &[42],
            &CleaningConfig::default(),
            5,
        )
        .unwrap();
        assert_eq!(r.cells[0].auprc, r.cells[1].auprc);
        assert_eq!(r.cells[0].rank, Some(1.5));
        assert_eq!(r.cells[1].rank, Some(1.5));
    }

    #[test]
    fn failures_become_null_cells() {
        // 12 training rows: GMR with k=15 cannot run, None can.
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let labels = (0..16).map(|i| u8::from(i % 2 == 0)).collect();
        let ds = NamedDataset::new("tiny", Dataset::from_rows(&rows, labels).unwrap());
        let config = CleaningConfig {
            scarcity_floor: 0,
            ..Default::default()
        };
        let r = run_benchmark(&[ds], &[SamplerId::None, SamplerId::Gmr], &[0], &config, 3).unwrap();
        assert!(r.cells[0].auprc.is_some());
        assert!(r.cells[1].auprc.is_none());
        assert!(r.cells[1].error.is_some());
        assert_eq!(r.cells[0].rank, Some(1.0));
        assert_eq!(r.summary[1].n_failed, 1);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(run_benchmark(&[], &[SamplerId::None], &[0], &CleaningConfig::default(), 3).is_err());
    }

    #[test]
    fn rank_csv_sorted_by_rank() {
        let suite = synthetic_suite(1, 9).unwrap();
        let r = run_benchmark(
            &suite,
            &[SamplerId::Rus, SamplerId::None],
            &[0, 1],
            &CleaningConfig::default(),
            5,
        )
        .unwrap();
        let mut out = Vec::new();
        r.write_rank_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,avg_rank,mean_auprc,std_auprc,n_cells,n_failed");
        assert_eq!(lines.len(), 3);
    }
}
