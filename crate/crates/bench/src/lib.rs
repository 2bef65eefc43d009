//! Shared fixtures for the criterion benchmarks.

use dropreg::simgen::{generate_rare_feature_dataset, generate_sparse_logistic, SimConfig, SparseLogisticConfig};
use dropreg::Dataset;

/// Rare-feature training set (d = 1050) with a plausible fitted-scale `β`.
pub fn rare_feature_fixture(n: usize, seed: u64) -> (Dataset, Vec<f64>) {
    let sim = generate_rare_feature_dataset(&SimConfig { n, seed, ..Default::default() })
        .expect("valid simulation config");
    (sim.data, sim.true_beta)
}

/// Small sparse logistic task with per-row support of about `dim · density`.
pub fn sparse_fixture(dim: usize, n: usize, density: f64, seed: u64) -> (Dataset, Vec<f64>) {
    generate_sparse_logistic(&SparseLogisticConfig { dim, n, density, weight_sd: 0.5 }, seed)
        .expect("valid sparse config")
}
