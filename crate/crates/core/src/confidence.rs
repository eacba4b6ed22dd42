//! Per-sample class votes from a sample's neighbourhood.
//!
//! [`estimate`] weights each neighbour by `1 / (d + eps)` and normalises the
//! weights per row; [`uniform_estimate`] gives every neighbour `1 / k`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::geometry::NeighborSet;

/// Additive stabiliser in the inverse-distance kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const DEFAULT: Epsilon = Epsilon(1e-8);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidConfig(format!("epsilon must be positive, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// One row of a [`ConfidenceTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub vote_0: f64,
    pub vote_1: f64,
    /// `argmax` of the votes; an exact tie predicts `0`.
    pub predicted: u8,
    /// Vote for the sample's own label.
    pub self_conf: f64,
    /// Vote for the majority class.
    pub maj_conf: f64,
}

impl Confidence {
    fn from_votes(vote_0: f64, vote_1: f64, label: u8) -> Self {
        Self {
            vote_0,
            vote_1,
            predicted: if vote_1 > vote_0 { MINORITY } else { MAJORITY },
            self_conf: if label == MAJORITY { vote_0 } else { vote_1 },
            maj_conf: vote_0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceTable {
    rows: Vec<Confidence>,
}

impl ConfidenceTable {
    pub fn rows(&self) -> &[Confidence] {
        &self.rows
    }

    pub fn get(&self, i: usize) -> &Confidence {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with columns `row_id, vote_0, vote_1, predicted, self_conf, maj_conf`.
    pub fn write_csv<W: Write>(&self, writer: W, row_ids: &[u64]) -> Result<()> {
        if row_ids.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                actual: row_ids.len(),
            });
        }
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["row_id", "vote_0", "vote_1", "predicted", "self_conf", "maj_conf"])?;
        for (row, id) in self.rows.iter().zip(row_ids) {
            wtr.write_record([
                id.to_string(),
                crate::data::format_f64(row.vote_0),
                crate::data::format_f64(row.vote_1),
                row.predicted.to_string(),
                crate::data::format_f64(row.self_conf),
                crate::data::format_f64(row.maj_conf),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })?;
        Ok(())
    }
}

fn check_neighbors(data: &Dataset, neighbors: &NeighborSet) -> Result<()> {
    if neighbors.n_rows() != data.len() {
        return Err(Error::InvalidInput(format!(
            "neighbor set has {} rows for {} samples",
            neighbors.n_rows(),
            data.len()
        )));
    }
    for i in 0..data.len() {
        if let Some(&j) = neighbors.indices(i).iter().find(|&&j| j >= data.len()) {
            return Err(Error::InvalidInput(format!("row {i} lists neighbor {j}, out of range")));
        }
    }
    Ok(())
}

/// Weighted class votes `(vote_0, vote_1)` from neighbour labels and raw
/// (unnormalised) weights.
pub(crate) fn weighted_votes(labels: impl Iterator<Item = u8>, weights: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut mass_0, mut mass_1) = (0.0, 0.0);
    for (y, w) in labels.zip(weights) {
        if y == MINORITY {
            mass_1 += w;
        } else {
            mass_0 += w;
        }
    }
    let total = mass_0 + mass_1;
    (mass_0 / total, mass_1 / total)
}

/// Inverse-distance weighted votes; `neighbors` must come from
/// [`crate::geometry::knn_all`] on the same `data`.
pub fn estimate(data: &Dataset, neighbors: &NeighborSet, epsilon: Epsilon) -> Result<ConfidenceTable> {
    check_neighbors(data, neighbors)?;
    let eps = epsilon.value();
    let rows = (0..data.len())
        .map(|i| {
            let (v0, v1) = weighted_votes(
                neighbors.indices(i).iter().map(|&j| data.label(j)),
                neighbors.distances(i).iter().map(|&d| 1.0 / (d + eps)),
            );
            Confidence::from_votes(v0, v1, data.label(i))
        })
        .collect();
    Ok(ConfidenceTable { rows })
}

/// Unweighted (box kernel) votes over the same neighbourhoods.
pub fn uniform_estimate(data: &Dataset, neighbors: &NeighborSet) -> Result<ConfidenceTable> {
    check_neighbors(data, neighbors)?;
    let k = neighbors.k() as f64;
    let rows = (0..data.len())
        .map(|i| {
            let minority = neighbors
                .indices(i)
                .iter()
                .filter(|&&j| data.label(j) == MINORITY)
                .count() as f64;
            let v1 = minority / k;
            Confidence::from_votes(1.0 - v1, v1, data.label(i))
        })
        .collect();
    Ok(ConfidenceTable { rows })
}
