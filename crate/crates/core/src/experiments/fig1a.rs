use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use crate::error::{contract, Result};
use crate::noising::gaussian_logistic_penalty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1aConfig {
    pub probabilities: Vec<f64>,
    pub variances: Vec<f64>,
}

impl Default for Fig1aConfig {
    fn default() -> Self {
        Self {
            probabilities: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
            variances: vec![0.0, 0.25, 1.0, 4.0],
        }
    }
}

/// Exact versus quadratic penalty for a single logistic margin under
/// Gaussian noise, over a grid of base probabilities and noise variances.
pub fn run_fig1a(config: &Fig1aConfig, seed: u64) -> Result<ExperimentReport> {
    if config.probabilities.is_empty() || config.variances.is_empty() {
        return Err(contract("grid must be non-empty"));
    }
    let mut report = ExperimentReport::new(
        "fig1a",
        seed,
        super::to_value(config),
        &["p", "sigma2", "exact", "quadratic"],
    );
    for &p in &config.probabilities {
        for &s2 in &config.variances {
            let (exact, quad) = gaussian_logistic_penalty(p, s2)?;
            report.rows.push(vec![p, s2, exact, quad]);
        }
    }
    let find = |p: f64, s2: f64| report.rows.iter().find(|r| r[0] == p && r[1] == s2).cloned();
    let mut checks = Vec::new();
    for &s2 in config.variances.iter().filter(|&&v| v > 0.0) {
        if let Some(r) = find(0.5, s2) {
            checks.push((format!("overestimate_p0.5_s2_{s2}"), r[3] > r[2], format!("quad {} vs exact {}", r[3], r[2])));
        }
    }
    if let Some(r) = find(0.95, 4.0) {
        checks.push(("underestimate_p0.95_s2_4".into(), r[3] < r[2], format!("quad {} vs exact {}", r[3], r[2])));
    }
    for (name, ok, detail) in checks {
        report.check(&name, ok, detail);
    }
    Ok(report)
}
