//! Workloads shared by the criterion benchmarks.

use gmr_core::{generate_overlap, Dataset, SyntheticSpec};

/// Overlapping two-class data with imbalance ratio 10.
pub fn overlap_workload(n: usize, dim: usize, seed: u64) -> Dataset {
    let n_minority = (n / 11).max(10);
    generate_overlap(&SyntheticSpec::separated(n - n_minority, n_minority, dim, 1.0, seed))
        .expect("valid synthetic spec")
}
