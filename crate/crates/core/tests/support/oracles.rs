//! Brute-force reference implementations, written against the raw feature
//! matrix so they share no code with the library.

#![allow(dead_code)]

use gmr_core::Dataset;

/// Small self-contained generator so oracle instances do not depend on the
/// library's RNG.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `lo..hi`.
    pub fn below(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }
}

/// Random dataset with both classes present. `grid` draws small integer
/// coordinates so exact distance ties are common.
pub fn random_dataset(rng: &mut SplitMix, n: usize, dim: usize, minority_rate: f64, grid: bool) -> Dataset {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        if grid {
                            rng.below(0, 4) as f64
                        } else {
                            rng.unit() * 4.0 - 2.0
                        }
                    })
                    .collect()
            })
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.unit() < minority_rate)).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return Dataset::from_rows(&rows, labels).unwrap();
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).powi(2);
    }
    s.sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0)
}

/// All other rows of `data` sorted by `(distance, index)`.
pub fn sorted_others(data: &Dataset, i: usize, cosine_metric: bool) -> Vec<(f64, usize)> {
    let dist = if cosine_metric { cosine } else { euclidean };
    let mut all: Vec<(f64, usize)> = (0..data.len())
        .filter(|&j| j != i)
        .map(|j| (dist(data.row(i), data.row(j)), j))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all
}

pub fn knn(data: &Dataset, k: usize, cosine_metric: bool) -> Vec<Vec<(f64, usize)>> {
    (0..data.len())
        .map(|i| {
            let mut v = sorted_others(data, i, cosine_metric);
            v.truncate(k);
            v
        })
        .collect()
}

/// `(vote_0, vote_1)` per row from inverse-distance weights.
pub fn weighted_votes(data: &Dataset, k: usize, eps: f64, cosine_metric: bool) -> Vec<(f64, f64)> {
    knn(data, k, cosine_metric)
        .into_iter()
        .map(|nbrs| {
            let total: f64 = nbrs.iter().map(|(d, _)| 1.0 / (d + eps)).sum();
            let v1: f64 = nbrs
                .iter()
                .filter(|(_, j)| data.label(*j) == 1)
                .map(|(d, _)| 1.0 / (d + eps))
                .sum::<f64>()
                / total;
            let v0: f64 = nbrs
                .iter()
                .filter(|(_, j)| data.label(*j) == 0)
                .map(|(d, _)| 1.0 / (d + eps))
                .sum::<f64>()
                / total;
            (v0, v1)
        })
        .collect()
}

/// Row ids ENN should remove: majority rows with strictly more minority
/// than majority among their `k` neighbours.
pub fn enn_removed(data: &Dataset, k: usize) -> Vec<u64> {
    let nn = knn(data, k, false);
    (0..data.len())
        .filter(|&i| data.label(i) == 0)
        .filter(|&i| {
            let m = nn[i].iter().filter(|(_, j)| data.label(*j) == 1).count();
            2 * m > k
        })
        .map(|i| data.row_ids()[i])
        .collect()
}

/// Row ids Tomek-link removal should drop: the majority side of every
/// opposite-label mutual nearest-neighbour pair.
pub fn tomek_removed(data: &Dataset) -> Vec<u64> {
    let nearest: Vec<usize> = (0..data.len()).map(|i| sorted_others(data, i, false)[0].1).collect();
    (0..data.len())
        .filter(|&i| {
            let j = nearest[i];
            data.label(i) == 0 && data.label(j) == 1 && nearest[j] == i
        })
        .map(|i| data.row_ids()[i])
        .collect()
}

/// Area under the step precision-recall curve, one threshold per distinct
/// score: `sum_t (R(t) - R(t_prev)) * P(t)`, thresholds descending.
pub fn auprc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let positives = labels.iter().filter(|&&y| y == 1).count() as f64;
    let (mut prev_recall, mut area) = (0.0, 0.0);
    for t in thresholds {
        let flagged: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = flagged.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let recall = tp / positives;
        let precision = tp / flagged.len() as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    area
}

/// Expected `(removed majority ids, removed minority ids)` from the cleaning
/// rules evaluated on the original dataset, Euclidean metric.
pub fn gmr_removed(data: &Dataset, k: usize, alpha: f64, beta: f64, gamma: f64, floor: usize) -> (Vec<u64>, Vec<u64>) {
    let n_min = data.labels().iter().filter(|&&y| y == 1).count();
    if n_min < floor {
        return (Vec::new(), Vec::new());
    }
    let votes = weighted_votes(data, k, 1e-8, false);
    let ids = data.row_ids();
    let mut maj = Vec::new();
    let mut candidates = Vec::new();
    for i in 0..data.len() {
        let (v0, v1) = votes[i];
        let predicted = if v1 > v0 { 1 } else { 0 };
        if data.label(i) == 0 {
            if predicted == 1 || v0 < alpha {
                maj.push(ids[i]);
            }
        } else if predicted == 0 && v0 > beta {
            candidates.push((v0, ids[i]));
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let cap = (gamma * n_min as f64).floor() as usize;
    let mut min: Vec<u64> = candidates.into_iter().take(cap).map(|c| c.1).collect();
    maj.sort_unstable();
    min.sort_unstable();
    (maj, min)
}
