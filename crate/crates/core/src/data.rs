//! Binary-labelled tabular datasets: representation, CSV ingestion and
//! export, stratified splitting, and synthetic two-Gaussian fixtures.
//!
//! Labels are coded `0` (majority) and `1` (minority). Features are taken
//! as-is: no scaling, imputation, or categorical encoding happens here, so
//! callers should standardise features themselves when scales differ.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Gaussian};

pub const MAJORITY: u8 = 0;
pub const MINORITY: u8 = 1;

/// Feature matrix (row-major), binary labels, and stable row identifiers.
///
/// Row ids survive every sampler untouched: removing rows shrinks the id
/// set but never renumbers it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    row_ids: Vec<u64>,
}

impl Dataset {
    /// Builds a dataset from per-row feature vectors, assigning row ids
    /// `0..N` in order.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    actual: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        let row_ids = (0..rows.len() as u64).collect();
        Self::from_parts(features, n_features, labels, row_ids)
    }

    /// Builds a dataset from a flat row-major matrix.
    ///
    /// Single-class datasets are accepted here; operations that need both
    /// classes check for themselves.
    pub fn from_parts(features: Vec<f64>, n_features: usize, labels: Vec<u8>, row_ids: Vec<u64>) -> Result<Self> {
        let n = labels.len();
        if row_ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row_ids.len(),
            });
        }
        if features.len() != n * n_features {
            return Err(Error::DimensionMismatch {
                expected: n * n_features,
                actual: features.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features.max(1),
                pos % n_features.max(1)
            )));
        }
        let mut sorted = row_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("row ids are not unique".into()));
        }
        Ok(Self {
            features,
            n_features,
            labels,
            row_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    /// `(majority count, minority count)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let minority = self.labels.iter().filter(|&&y| y == MINORITY).count();
        (self.len() - minority, minority)
    }

    /// Majority count over minority count; `None` without minority rows.
    pub fn imbalance_ratio(&self) -> Option<f64> {
        let (maj, min) = self.class_counts();
        imbalance_ratio(maj, min)
    }

    pub fn ensure_both_classes(&self) -> Result<()> {
        let (majority, minority) = self.class_counts();
        if majority == 0 || minority == 0 {
            return Err(Error::SingleClass { majority, minority });
        }
        Ok(())
    }

    /// Rows at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        let mut row_ids = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            row_ids.push(self.row_ids[i]);
        }
        Self {
            features,
            n_features: self.n_features,
            labels,
            row_ids,
        }
    }

    /// Keeps rows whose position satisfies `keep`, preserving order.
    pub fn retain_positions(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let indices: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.select(&indices)
    }

    /// Drops every row whose id is in `removed`, preserving order.
    pub fn without_row_ids(&self, removed: &[u64]) -> Self {
        let removed: std::collections::HashSet<u64> = removed.iter().copied().collect();
        self.retain_positions(|i| !removed.contains(&self.row_ids[i]))
    }
}

pub fn imbalance_ratio(majority: usize, minority: usize) -> Option<f64> {
    (minority > 0).then(|| majority as f64 / minority as f64)
}

/// How raw label strings map onto class codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    /// Raw value coded as `0`.
    pub majority: String,
    /// Raw value coded as `1`.
    pub minority: String,
}

impl LabelMapping {
    pub fn raw(&self, label: u8) -> &str {
        if label == MINORITY {
            &self.minority
        } else {
            &self.majority
        }
    }
}

/// Column layout of an ingested CSV, needed to write rows back out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub mapping: LabelMapping,
}

/// Reads a headed CSV file. See [`read_csv`].
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    minority_label: Option<&str>,
) -> Result<(Dataset, CsvSchema)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column, minority_label)
}

/// Parses a headed CSV into a dataset.
///
/// Every non-label column must hold finite numbers. Without an explicit
/// `minority_label`, the less frequent raw label becomes class `1`; on a
/// count tie the lexicographically smaller raw label does. Row ids are the
/// zero-based data-row positions in the file.
pub fn read_csv<R: Read>(reader: R, label_column: &str, minority_label: Option<&str>) -> Result<(Dataset, CsvSchema)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();

    let mut label_positions = header.iter().enumerate().filter(|(_, h)| *h == label_column);
    let label_idx = match (label_positions.next(), label_positions.next()) {
        (None, _) => return Err(Error::MissingColumn(label_column.to_owned())),
        (Some(_), Some(_)) => return Err(Error::AmbiguousColumn(label_column.to_owned())),
        (Some((i, _)), None) => i,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidInput("no feature columns besides the label".into()));
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(cell.to_owned());
                continue;
            }
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(Error::BadCell {
                        row: row + 1,
                        column: header[col].clone(),
                        value: cell.to_owned(),
                    })
                }
            }
        }
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &raw_labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    if counts.len() != 2 {
        return Err(Error::LabelCount {
            found: counts.len(),
            values: counts.keys().map(|s| s.to_string()).collect(),
        });
    }
    let mut entries: Vec<(&str, usize)> = counts.into_iter().collect();
    let (minority, majority) = match minority_label {
        Some(m) => {
            let pos = entries
                .iter()
                .position(|(l, _)| *l == m)
                .ok_or_else(|| Error::UnknownMinorityLabel(m.to_owned()))?;
            (entries[pos].0, entries[1 - pos].0)
        }
        None => {
            // BTreeMap order is lexicographic, and the sort is stable, so
            // equal counts keep the smaller label first.
            entries.sort_by_key(|&(_, c)| c);
            (entries[0].0, entries[1].0)
        }
    };
    let mapping = LabelMapping {
        majority: majority.to_owned(),
        minority: minority.to_owned(),
    };
    let labels = raw_labels
        .iter()
        .map(|l| if *l == mapping.minority { MINORITY } else { MAJORITY })
        .collect::<Vec<_>>();
    let row_ids = (0..labels.len() as u64).collect();
    let dataset = Dataset::from_parts(features, feature_names.len(), labels, row_ids)?;
    Ok((
        dataset,
        CsvSchema {
            feature_names,
            label_column: label_column.to_owned(),
            mapping,
        },
    ))
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes features in schema order, then the label column with raw labels.
pub fn write_csv<W: Write>(writer: W, data: &Dataset, schema: &CsvSchema) -> Result<()> {
    if schema.feature_names.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: schema.feature_names.len(),
            actual: data.n_features(),
        });
    }
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = schema.feature_names.clone();
    header.push(schema.label_column.clone());
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..data.len() {
        record.clear();
        record.extend(data.row(i).iter().map(|&v| format_f64(v)));
        record.push(schema.mapping.raw(data.label(i)).to_owned());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}

/// Test fraction and shuffle seed for [`stratified_split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Self {
        Self { test_fraction, seed }
    }
}

/// Number of test rows taken from a class of `count` rows.
///
/// `round(fraction * count)`, at least 1 and at most `count - 1` so both
/// sides of the split keep every class.
pub fn test_count(fraction: f64, count: usize) -> usize {
    let n = (fraction * count as f64).round() as usize;
    n.max(1).min(count.saturating_sub(1))
}

/// Per-class seeded split into `(train, test)`.
///
/// Each class's rows are ordered by row id and shuffled with a generator
/// seeded from `spec.seed`; the first [`test_count`] of them go to test.
/// Both halves keep the original row order.
pub fn stratified_split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let mut in_test = vec![false; data.len()];
    let mut rng = rng::seeded(spec.seed);
    for class in [MAJORITY, MINORITY] {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        if members.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                actual: members.len(),
            });
        }
        members.sort_by_key(|&i| data.row_ids()[i]);
        members.shuffle(&mut rng);
        for &i in &members[..test_count(spec.test_fraction, members.len())] {
            in_test[i] = true;
        }
    }
    let train = data.retain_positions(|i| !in_test[i]);
    let test = data.retain_positions(|i| in_test[i]);
    Ok((train, test))
}

/// Two isotropic Gaussian classes sharing one standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_majority: usize,
    pub n_minority: usize,
    pub majority_mean: Vec<f64>,
    pub minority_mean: Vec<f64>,
    pub std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Classes whose means differ by `separation` standard deviations along
    /// the first axis, majority centred at the origin.
    pub fn separated(n_majority: usize, n_minority: usize, dim: usize, separation: f64, seed: u64) -> Self {
        let mut minority_mean = vec![0.0; dim];
        if let Some(first) = minority_mean.first_mut() {
            *first = separation;
        }
        Self {
            n_majority,
            n_minority,
            majority_mean: vec![0.0; dim],
            minority_mean,
            std: 1.0,
            seed,
        }
    }

    pub fn imbalance_ratio(&self) -> Option<f64> {
        imbalance_ratio(self.n_majority, self.n_minority)
    }

    pub fn validate(&self) -> Result<()> {
        if self.majority_mean.len() != self.minority_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.majority_mean.len(),
                actual: self.minority_mean.len(),
            });
        }
        if self.majority_mean.is_empty() {
            return Err(Error::InvalidConfig("means must have at least one dimension".into()));
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(Error::InvalidConfig(format!("std must be positive, got {}", self.std)));
        }
        Ok(())
    }

    /// Closed-form `P(Y=1 | x)` with class priors taken from the counts.
    pub fn true_posterior(&self, x: &[f64]) -> f64 {
        let sq = |mean: &[f64]| -> f64 { x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum() };
        let var = self.std * self.std;
        let prior_log_odds = (self.n_minority as f64 / self.n_majority as f64).ln();
        let log_odds = prior_log_odds + (sq(&self.majority_mean) - sq(&self.minority_mean)) / (2.0 * var);
        1.0 / (1.0 + (-log_odds).exp())
    }
}

/// Samples a dataset from `spec`: majority rows first, then minority rows,
/// row ids `0..N`.
pub fn generate_overlap(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let dim = spec.majority_mean.len();
    let n = spec.n_majority + spec.n_minority;
    let mut gauss = Gaussian::new(spec.seed);
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (mean, count, label) in [
        (&spec.majority_mean, spec.n_majority, MAJORITY),
        (&spec.minority_mean, spec.n_minority, MINORITY),
    ] {
        for _ in 0..count {
            features.extend(mean.iter().map(|m| m + spec.std * gauss.sample()));
            labels.push(label);
        }
    }
    Dataset::from_parts(features, dim, labels, (0..n as u64).collect())
}
