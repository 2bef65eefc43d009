use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use crate::error::{contract, Result};
use crate::glm::Family;
use crate::model::accuracy;
use crate::noising::{quad_penalty_rows, seed, NoiseModel};
use crate::optim::{fit_glm, BatchConfig, PenaltyMode};
use crate::semisup::{fit_semisup, semisup_quad_penalty, DiscountAlpha, UnlabeledSet};
use crate::simgen::{generate_topic_documents, TopicConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemisupTrialConfig {
    pub trials: usize,
    pub n_labeled: usize,
    pub m_unlabeled: usize,
    pub n_test: usize,
    pub delta: f64,
    pub alpha: f64,
    pub topic: TopicConfig,
    pub batch: BatchConfig,
}

impl Default for SemisupTrialConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            n_labeled: 100,
            m_unlabeled: 10_000,
            n_test: 5000,
            delta: 0.5,
            alpha: 0.4,
            topic: TopicConfig::default(),
            batch: BatchConfig::default(),
        }
    }
}

/// Supervised dropout versus the semi-supervised penalty on two-topic
/// documents. Trial `t` draws labeled, unlabeled and test sets from
/// `stream(seed, 3t)`, `stream(seed, 3t + 1)` and `stream(seed, 3t + 2)`.
pub fn run_semisup_trials(config: &SemisupTrialConfig, seed: u64) -> Result<ExperimentReport> {
    if config.trials == 0 || config.n_labeled == 0 || config.n_test == 0 {
        return Err(contract("trials, n_labeled and n_test must be positive"));
    }
    let noise = NoiseModel::dropout(config.delta)?;
    let alpha = DiscountAlpha::new(config.alpha)?;
    let supervised = PenaltyMode::QuadNoising { noise };
    let family = Family::Logistic;
    let rows: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let s = |k: u64| seed::stream(seed, 3 * t as u64 + k);
            let labeled = generate_topic_documents(&config.topic, config.n_labeled, s(0))?;
            let unlabeled =
                UnlabeledSet::from_dataset(&generate_topic_documents(&config.topic, config.m_unlabeled, s(1))?);
            let test = generate_topic_documents(&config.topic, config.n_test, s(2))?;
            let sup = fit_glm(family, &labeled, &supervised, &config.batch)?;
            let semi = fit_semisup(family, &labeled, &unlabeled, &noise, alpha, &config.batch)?;
            let a_sup = accuracy(&sup.beta_hat, &test, None);
            let a_semi = accuracy(&semi.beta_hat, &test, None);
            Ok(vec![t as f64, a_sup, a_semi, f64::from(u8::from(a_semi >= a_sup))])
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "semisup",
        seed,
        super::to_value(config),
        &["trial", "supervised_accuracy", "semisup_accuracy", "semisup_at_least_as_good"],
    );
    report.rows = rows;
    report.aggregate(&["supervised_accuracy", "semisup_accuracy", "semisup_at_least_as_good"]);
    let wins = report.column("semisup_at_least_as_good").unwrap().iter().sum::<f64>() as usize;
    let needed = (0.7 * config.trials as f64).ceil() as usize;
    report.check(
        "semisup_wins",
        wins >= needed,
        format!("{wins}/{} trials with semisup >= supervised (need {needed})", config.trials),
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub trials: usize,
    pub n_labeled: usize,
    pub m_unlabeled: usize,
    pub population: usize,
    pub delta: f64,
    pub alpha: f64,
    /// Weight on the class-1 topic words; the class-0 words get its negation.
    pub weight: f64,
    pub topic: TopicConfig,
    pub min_fraction: f64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            n_labeled: 50,
            m_unlabeled: 5000,
            population: 1_000_000,
            delta: 0.5,
            alpha: 0.4,
            weight: 0.3,
            topic: TopicConfig::default(),
            min_fraction: 0.8,
        }
    }
}

impl VarianceConfig {
    pub fn beta(&self) -> Vec<f64> {
        (0..self.topic.vocabulary)
            .map(|j| match j % 4 {
                0 => self.weight,
                1 => -self.weight,
                _ => 0.0,
            })
            .collect()
    }
}

const POPULATION_CHUNK: usize = 10_000;

/// How well each estimator tracks the population penalty at a fixed `β`.
/// The target for `n` labeled rows is `n` times the per-row surrogate
/// penalty averaged over `population` fresh documents; both the
/// labeled-only and the semi-supervised estimator are unbiased for it.
pub fn run_variance_reduction(config: &VarianceConfig, seed: u64) -> Result<ExperimentReport> {
    if config.trials == 0 || config.n_labeled == 0 || config.population == 0 {
        return Err(contract("trials, n_labeled and population must be positive"));
    }
    let noise = NoiseModel::dropout(config.delta)?;
    let alpha = DiscountAlpha::new(config.alpha)?;
    let family = Family::Logistic;
    let beta = config.beta();

    let chunks = config.population.div_ceil(POPULATION_CHUNK);
    let pop_total: f64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let size = POPULATION_CHUNK.min(config.population - k * POPULATION_CHUNK);
            let docs = generate_topic_documents(&config.topic, size, seed::mix(seed, 1, k as u64))?;
            Ok(quad_penalty_rows(family, docs.rows(), &beta, &noise)?.value)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let per_row = pop_total / config.population as f64;
    let target = per_row * config.n_labeled as f64;

    let rows: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let labeled = generate_topic_documents(&config.topic, config.n_labeled, seed::mix(seed, 0, 2 * t as u64))?;
            let unlabeled = UnlabeledSet::from_dataset(&generate_topic_documents(
                &config.topic,
                config.m_unlabeled,
                seed::mix(seed, 0, 2 * t as u64 + 1),
            )?);
            let lab = quad_penalty_rows(family, labeled.rows(), &beta, &noise)?.value;
            let semi = semisup_quad_penalty(family, &labeled, &unlabeled, &beta, &noise, alpha)?.value;
            let (e_lab, e_semi) = ((lab - target).abs(), (semi - target).abs());
            Ok(vec![t as f64, lab, semi, e_lab, e_semi, f64::from(u8::from(e_semi <= e_lab))])
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "variance",
        seed,
        serde_json::json!({ "config": super::to_value(config), "population_penalty": target }),
        &["trial", "labeled_penalty", "semisup_penalty", "labeled_error", "semisup_error", "semisup_closer"],
    );
    report.rows = rows;
    report.aggregate(&["labeled_error", "semisup_error", "semisup_closer"]);
    let frac = report.aggregate_of("semisup_closer").unwrap().mean;
    report.check(
        "variance_reduction",
        frac >= config.min_fraction,
        format!("semisup no worse in {:.1}% of trials", 100.0 * frac),
    );
    Ok(report)
}
