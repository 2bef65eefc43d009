use serde::{Deserialize, Serialize};

use super::report::{median, ExperimentReport};
use crate::error::Result;
use crate::glm::{fisher_diagonals, Family};
use crate::noising::seed;
use crate::optim::{run_online, OnlineRule};
use crate::simgen::{generate_logistic_stream, LogisticStreamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherConfig {
    pub stream: LogisticStreamConfig,
    pub adagrad_eta: f64,
    pub dropout_eta: f64,
    pub passes: usize,
    pub max_median_gap: f64,
}

impl Default for FisherConfig {
    fn default() -> Self {
        Self { stream: LogisticStreamConfig::default(), adagrad_eta: 0.5, dropout_eta: 2.0, passes: 1, max_median_gap: 0.05 }
    }
}

/// `|a − b| / max(a, b)`, and 0 when both are 0.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Run AdaGrad and dropout descent over the same stream, then compare the
/// two diagonal Fisher estimates per coordinate: squared gradients against
/// curvature, both at the final dropout-descent iterate and as accumulated
/// along each trajectory.
pub fn run_fisher_compare(config: &FisherConfig, seed: u64) -> Result<ExperimentReport> {
    let stream_cfg = LogisticStreamConfig { seed: seed::stream(seed, 0), ..config.stream.clone() };
    let (data, true_beta) = generate_logistic_stream(&stream_cfg)?;
    let order_seed = seed::stream(seed, 1);
    let family = Family::Logistic;
    let ada = run_online(&OnlineRule::adagrad(config.adagrad_eta), &data, config.passes, family, order_seed)?;
    let dd = run_online(&OnlineRule::dropout_descent(config.dropout_eta), &data, config.passes, family, order_seed)?;
    let beta = &dd.final_state.beta;
    let (diag_h, diag_g) = fisher_diagonals(family, &data, beta)?;
    let n = data.len() as f64;

    let mut report = ExperimentReport::new(
        "fisher",
        seed,
        super::to_value(config),
        &[
            "coordinate",
            "true_beta",
            "beta_final",
            "diag_g",
            "diag_h",
            "gap",
            "online_diag_g",
            "online_diag_h",
            "online_gap",
        ],
    );
    let mut gaps = Vec::new();
    let mut zero_info_ok = true;
    for j in 0..data.dim() {
        let (g, h) = (diag_g[j] / n, diag_h[j] / n);
        let (og, oh) = (ada.final_state.diag_g[j] / n, dd.final_state.diag_h[j] / n);
        let gap = relative_gap(g, h);
        if g == 0.0 && h == 0.0 {
            zero_info_ok &= og == 0.0 && oh == 0.0 && beta[j] == 0.0;
        } else {
            gaps.push(gap);
        }
        report.rows.push(vec![j as f64, true_beta[j], beta[j], g, h, gap, og, oh, relative_gap(og, oh)]);
    }
    let med = median(&gaps);
    report.check(
        "median_relative_gap",
        med < config.max_median_gap,
        format!("median over {} informative coordinates = {med:.6}", gaps.len()),
    );
    report.check("zero_information_coordinates", zero_info_ok, "never-active features have zero diagonals".into());
    Ok(report)
}
