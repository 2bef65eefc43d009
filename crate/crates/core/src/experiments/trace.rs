use serde::{Deserialize, Serialize};

use super::report::{pearson, ExperimentReport};
use crate::data::Dataset;
use crate::error::{contract, Result};
use crate::glm::Family;
use crate::noising::{mc_penalty, quad_penalty, seed, NoiseModel};
use crate::optim::{minimize_observed, penalized_objective, BatchConfig, PenaltyMode};
use crate::simgen::{generate_sparse_logistic, SparseLogisticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub task: SparseLogisticConfig,
    pub delta: f64,
    pub mc_samples: usize,
    pub min_correlation: f64,
    pub batch: BatchConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            task: SparseLogisticConfig::default(),
            delta: 0.5,
            mc_samples: 1000,
            min_correlation: 0.95,
            batch: BatchConfig::default(),
        }
    }
}

/// Fit the dropout surrogate from `β = 0` and, at the start and after each
/// accepted quasi-Newton step, record the Monte Carlo estimate of the exact
/// penalty next to the surrogate. The MC draws are the same at every step.
pub fn run_penalty_trace(data: &Dataset, config: &TraceConfig, seed: u64) -> Result<ExperimentReport> {
    if config.mc_samples == 0 {
        return Err(contract("need at least one Monte Carlo sample"));
    }
    let noise = NoiseModel::dropout(config.delta)?;
    let mode = PenaltyMode::QuadNoising { noise };
    let family = Family::Logistic;
    family.check_labels(data.labels())?;
    let mut path: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let fit = minimize_observed(
        |b| penalized_objective(family, data, &mode, b),
        &vec![0.0; data.dim()],
        &config.batch,
        |it, b, f| path.push((it, b.to_vec(), f)),
    )?;
    let mc_seed = seed::stream(seed, 0);
    let mut rows = Vec::with_capacity(path.len());
    for (it, beta, objective) in &path {
        let mc = mc_penalty(family, data.rows(), beta, &noise, config.mc_samples, mc_seed)?;
        let rq = quad_penalty(family, data, beta, &noise)?.value;
        rows.push(vec![*it as f64, *objective, mc.mean, mc.std_error, rq]);
    }
    let mut report = ExperimentReport::new(
        "trace",
        seed,
        serde_json::json!({
            "config": super::to_value(config),
            "rows": data.len(),
            "dim": data.dim(),
            "iterations": fit.iterations,
            "converged": fit.converged,
        }),
        &["iteration", "objective", "penalty_mc", "penalty_mc_se", "penalty_quad"],
    );
    report.rows = rows;
    let r = pearson(&report.column("penalty_mc").unwrap(), &report.column("penalty_quad").unwrap());
    report.check("penalty_correlation", r >= config.min_correlation, format!("pearson r = {r:.6}"));
    Ok(report)
}

/// [`run_penalty_trace`] on the seeded sparse logistic task; the data come
/// from `stream(seed, 1)`.
pub fn run_trace_task(config: &TraceConfig, seed: u64) -> Result<ExperimentReport> {
    let (data, _) = generate_sparse_logistic(&config.task, seed::stream(seed, 1))?;
    run_penalty_trace(&data, config, seed)
}
