//! Synthetic data generators.
//!
//! [`generate_rare_feature_dataset`] builds the rare-but-discriminative
//! simulation: 5 signal groups of 10 features, each group active in 1 of
//! every 25 rows, plus 1000 always-on Gaussian nuisance features. The other
//! generators feed the Fisher-consistency and semi-supervised experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SparseVector};
use crate::error::{contract, Result};
use crate::glm::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    /// Groups cycled over, of which the first `discriminative_groups` carry signal.
    pub n_groups: usize,
    pub discriminative_groups: usize,
    pub group_size: usize,
    pub nuisance: usize,
    /// Weight on every discriminative feature.
    pub beta_signal: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 75,
            n_groups: 25,
            discriminative_groups: 5,
            group_size: 10,
            nuisance: 1000,
            beta_signal: 0.057,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn signal_dim(&self) -> usize {
        self.discriminative_groups * self.group_size
    }

    pub fn dim(&self) -> usize {
        self.signal_dim() + self.nuisance
    }

    /// Rate of the exponential magnitudes. A feature is active in a
    /// `1/n_groups` fraction of rows, and an Exp(rate) draw has second moment
    /// `2/rate²`, so a unit marginal second moment needs `rate = sqrt(2/n_groups)`.
    pub fn exponential_rate(&self) -> f64 {
        (2.0 / self.n_groups as f64).sqrt()
    }

    pub fn true_beta(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.dim()];
        beta[..self.signal_dim()].fill(self.beta_signal);
        beta
    }

    fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || self.discriminative_groups > self.n_groups || self.group_size == 0 {
            return Err(contract("invalid group layout"));
        }
        if !self.beta_signal.is_finite() {
            return Err(contract("beta_signal must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub data: Dataset,
    pub true_beta: Vec<f64>,
    /// Rows whose group carries signal.
    pub signal_mask: Vec<bool>,
}

/// Row-by-row generator for the rare-feature simulation; lets large test sets
/// be scored without holding them in memory.
///
/// Row `i` belongs to group `i mod n_groups` (0-based); each row draws a fair
/// sign, then its group's exponential magnitudes, then the nuisance normals,
/// then a Bernoulli(σ(x·β)) label, all from one seeded stream.
pub struct RareFeatureRows {
    config: SimConfig,
    rng: ChaCha8Rng,
    exp: Exp<f64>,
    beta: Vec<f64>,
    next: usize,
}

impl RareFeatureRows {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            exp: Exp::new(config.exponential_rate()).expect("positive rate"),
            beta: config.true_beta(),
            next: 0,
        })
    }

    pub fn true_beta(&self) -> &[f64] {
        &self.beta
    }
}

impl Iterator for RareFeatureRows {
    /// `(x, y, carries_signal)`
    type Item = (SparseVector, f64, bool);

    fn next(&mut self) -> Option<Self::Item> {
        let cfg = &self.config;
        if self.next >= cfg.n {
            return None;
        }
        let group = self.next % cfg.n_groups;
        self.next += 1;
        let rng = &mut self.rng;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let active = group < cfg.discriminative_groups;
        let mut idx = Vec::with_capacity(cfg.group_size + cfg.nuisance);
        let mut vals = Vec::with_capacity(cfg.group_size + cfg.nuisance);
        if active {
            let start = group * cfg.group_size;
            for j in start..start + cfg.group_size {
                idx.push(j);
                vals.push(sign * self.exp.sample(rng));
            }
        }
        let signal = cfg.signal_dim();
        for j in 0..cfg.nuisance {
            idx.push(signal + j);
            vals.push(StandardNormal.sample(rng));
        }
        let x = SparseVector::new(idx, vals, cfg.dim()).expect("ascending finite entries");
        let p = sigmoid(x.dot(&self.beta));
        let y = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
        Some((x, y, active))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.config.n - self.next;
        (left, Some(left))
    }
}

pub fn generate_rare_feature_dataset(config: &SimConfig) -> Result<SimData> {
    let gen = RareFeatureRows::new(config)?;
    let true_beta = gen.true_beta().to_vec();
    let mut rows = Vec::with_capacity(config.n);
    let mut labels = Vec::with_capacity(config.n);
    let mut signal_mask = Vec::with_capacity(config.n);
    for (x, y, m) in gen {
        rows.push(x);
        labels.push(y);
        signal_mask.push(m);
    }
    Ok(SimData { data: Dataset::new(rows, labels, config.dim())?, true_beta, signal_mask })
}

/// Dense logistic stream with unequal feature scales, plus one trailing
/// feature that is never active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticStreamConfig {
    pub n: usize,
    pub active_features: usize,
    pub seed: u64,
}

impl Default for LogisticStreamConfig {
    fn default() -> Self {
        Self { n: 50_000, active_features: 10, seed: 0 }
    }
}

impl LogisticStreamConfig {
    pub fn dim(&self) -> usize {
        self.active_features + 1
    }

    /// Feature `j` has scale `0.5 + 1.5 j / (k − 1)`.
    pub fn scales(&self) -> Vec<f64> {
        let k = self.active_features;
        (0..k)
            .map(|j| if k > 1 { 0.5 + 1.5 * j as f64 / (k - 1) as f64 } else { 1.0 })
            .collect()
    }

    /// Alternating-sign weights `±0.4 / scale_j`, zero on the inactive feature.
    pub fn true_beta(&self) -> Vec<f64> {
        let mut beta: Vec<f64> = self
            .scales()
            .iter()
            .enumerate()
            .map(|(j, s)| if j % 2 == 0 { 0.4 / s } else { -0.4 / s })
            .collect();
        beta.push(0.0);
        beta
    }
}

pub fn generate_logistic_stream(config: &LogisticStreamConfig) -> Result<(Dataset, Vec<f64>)> {
    if config.active_features == 0 {
        return Err(contract("need at least one active feature"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scales = config.scales();
    let beta = config.true_beta();
    let dim = config.dim();
    let mut rows = Vec::with_capacity(config.n);
    let mut labels = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let vals: Vec<f64> = scales
            .iter()
            .map(|s| s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let x = SparseVector::new((0..vals.len()).collect(), vals, dim)?;
        let p = sigmoid(x.dot(&beta));
        labels.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        rows.push(x);
    }
    Ok((Dataset::new(rows, labels, dim)?, beta))
}

/// Two-topic bag-of-words documents. Words `j ≡ 0 (mod 4)` are boosted for
/// class 1 and words `j ≡ 1 (mod 4)` for class 0; every other word is neutral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicConfig {
    pub vocabulary: usize,
    pub words_per_document: usize,
    pub boost: f64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self { vocabulary: 100, words_per_document: 15, boost: 3.0 }
    }
}

impl TopicConfig {
    fn word_weights(&self, label: f64) -> Vec<f64> {
        let hot = if label == 1.0 { 0 } else { 1 };
        let w: Vec<f64> = (0..self.vocabulary)
            .map(|j| if j % 4 == hot { self.boost } else { 1.0 })
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }
}

/// `n` documents with balanced random labels, drawn from one seeded stream.
pub fn generate_topic_documents(config: &TopicConfig, n: usize, seed: u64) -> Result<Dataset> {
    if config.vocabulary == 0 || !(config.boost > 0.0) {
        return Err(contract("invalid topic configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdfs: Vec<Vec<f64>> = [0.0, 1.0]
        .iter()
        .map(|&y| {
            config
                .word_weights(y)
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let dim = config.vocabulary;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let cdf = &cdfs[y as usize];
        let mut counts = vec![0.0; dim];
        for _ in 0..config.words_per_document {
            let u: f64 = rng.random();
            let j = cdf.partition_point(|&c| c <= u).min(dim - 1);
            counts[j] += 1.0;
        }
        rows.push(SparseVector::from_dense(&counts));
        labels.push(y);
    }
    Dataset::new(rows, labels, dim)
}

/// Sparse Gaussian design: each entry is nonzero with probability `density`
/// and then standard normal; weights are i.i.d. `N(0, weight_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseLogisticConfig {
    pub dim: usize,
    pub n: usize,
    pub density: f64,
    pub weight_sd: f64,
}

impl Default for SparseLogisticConfig {
    fn default() -> Self {
        Self { dim: 50, n: 200, density: 0.2, weight_sd: 0.5 }
    }
}

pub fn generate_sparse_logistic(config: &SparseLogisticConfig, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if config.dim == 0 || !(0.0..=1.0).contains(&config.density) || !(config.weight_sd >= 0.0) {
        return Err(contract("invalid sparse logistic configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..config.dim)
        .map(|_| config.weight_sd * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let mut rows = Vec::with_capacity(config.n);
    let mut labels = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for j in 0..config.dim {
            if rng.random::<f64>() < config.density {
                idx.push(j);
                vals.push(StandardNormal.sample(&mut rng));
            }
        }
        let x = SparseVector::new(idx, vals, config.dim)?;
        let p = sigmoid(x.dot(&beta));
        labels.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        rows.push(x);
    }
    Ok((Dataset::new(rows, labels, config.dim)?, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_cycling() {
        let cfg = SimConfig { n: 250, seed: 5, ..Default::default() };
        let sim = generate_rare_feature_dataset(&cfg).unwrap();
        assert_eq!(sim.data.dim(), 1050);
        assert_eq!(sim.signal_mask.iter().filter(|&&m| m).count(), 50);
        // every discriminative column is active in exactly 4% of rows
        let mut active = vec![0usize; 50];
        for r in sim.data.rows() {
            for &j in r.indices().iter().filter(|&&j| j < 50) {
                active[j] += 1;
            }
        }
        assert!(active.iter().all(|&c| c == 10), "{active:?}");
    }

    #[test]
    fn non_signal_rows_have_zero_margin() {
        let cfg = SimConfig { n: 100, seed: 9, ..Default::default() };
        let sim = generate_rare_feature_dataset(&cfg).unwrap();
        for (x, &m) in sim.data.rows().iter().zip(&sim.signal_mask) {
            if !m {
                assert_eq!(x.dot(&sim.true_beta), 0.0);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SimConfig { n: 30, seed: 42, ..Default::default() };
        assert_eq!(
            generate_rare_feature_dataset(&cfg).unwrap(),
            generate_rare_feature_dataset(&cfg).unwrap()
        );
        let other = SimConfig { seed: 43, ..cfg.clone() };
        assert_ne!(
            generate_rare_feature_dataset(&cfg).unwrap().data,
            generate_rare_feature_dataset(&other).unwrap().data
        );
    }

    #[test]
    fn exponential_rate_matches_marginal_moment() {
        assert!((SimConfig::default().exponential_rate() - 0.282_842_712).abs() < 1e-9);
    }

    #[test]
    fn stream_has_inactive_trailing_feature() {
        let cfg = LogisticStreamConfig { n: 50, ..Default::default() };
        let (d, beta) = generate_logistic_stream(&cfg).unwrap();
        assert_eq!(d.dim(), 11);
        assert_eq!(beta[10], 0.0);
        assert!(d.rows().iter().all(|r| r.get(10) == 0.0));
    }

    #[test]
    fn topic_documents_have_fixed_length() {
        let d = generate_topic_documents(&TopicConfig::default(), 20, 3).unwrap();
        for r in d.rows() {
            assert_eq!(r.values().iter().sum::<f64>(), 15.0);
        }
    }
}
