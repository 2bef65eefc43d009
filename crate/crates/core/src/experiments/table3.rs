use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use crate::error::{contract, Result};
use crate::noising::{seed, NoiseModel};
use crate::optim::{fit_glm, BatchConfig, PenaltyMode};
use crate::simgen::{generate_rare_feature_dataset, RareFeatureRows, SimConfig};
use crate::glm::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Config {
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub delta: f64,
    pub batch: BatchConfig,
}

impl Default for Table3Config {
    fn default() -> Self {
        Self { runs: 100, n_train: 75, n_test: 10_000, lambda: 32.0, delta: 0.9, batch: BatchConfig::default() }
    }
}

#[derive(Default)]
struct Hits {
    active: usize,
    active_rows: usize,
    all: usize,
}

/// L2 versus dropout on the rare-feature simulation. Run `r` trains on
/// `stream(seed, 2r)` and tests on `stream(seed, 2r + 1)`; the test rows are
/// generated and scored one at a time.
pub fn run_table3(config: &Table3Config, seed: u64) -> Result<ExperimentReport> {
    if config.runs == 0 || config.n_train == 0 || config.n_test == 0 {
        return Err(contract("runs, n_train and n_test must be positive"));
    }
    let l2 = PenaltyMode::L2 { lambda: config.lambda };
    let dropout = PenaltyMode::QuadNoising { noise: NoiseModel::dropout(config.delta)? };
    l2.validate()?;
    config.batch.validate()?;

    let rows: Vec<Vec<f64>> = (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let train_cfg = SimConfig { n: config.n_train, seed: seed::stream(seed, 2 * r as u64), ..Default::default() };
            let test_cfg = SimConfig { n: config.n_test, seed: seed::stream(seed, 2 * r as u64 + 1), ..Default::default() };
            let train = generate_rare_feature_dataset(&train_cfg)?;
            let fit_l2 = fit_glm(Family::Logistic, &train.data, &l2, &config.batch)?;
            let fit_do = fit_glm(Family::Logistic, &train.data, &dropout, &config.batch)?;
            let (mut h_l2, mut h_do) = (Hits::default(), Hits::default());
            for (x, y, active) in RareFeatureRows::new(&test_cfg)? {
                for (h, beta) in [(&mut h_l2, &fit_l2.beta_hat), (&mut h_do, &fit_do.beta_hat)] {
                    let hit = usize::from((if x.dot(beta) >= 0.0 { 1.0 } else { 0.0 }) == y);
                    h.all += hit;
                    if active {
                        h.active += hit;
                        h.active_rows += 1;
                    }
                }
            }
            let n = config.n_test as f64;
            let act = |h: &Hits| h.active as f64 / h.active_rows.max(1) as f64;
            Ok(vec![
                r as f64,
                act(&h_l2),
                act(&h_do),
                h_l2.all as f64 / n,
                h_do.all as f64 / n,
                f64::from(u8::from(fit_l2.converged)),
                f64::from(u8::from(fit_do.converged)),
            ])
        })
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new(
        "table3",
        seed,
        super::to_value(config),
        &["run", "l2_active", "dropout_active", "l2_all", "dropout_all", "l2_converged", "dropout_converged"],
    );
    report.rows = rows;
    report.aggregate(&["l2_active", "dropout_active", "l2_all", "dropout_all"]);
    // Rows without signal are label coin flips, so all-row accuracy should be
    // a 20/80 mix of active accuracy and 0.5.
    let active_share = 5.0 / 25.0;
    for which in ["l2", "dropout"] {
        let act = report.aggregate_of(&format!("{which}_active")).unwrap().mean;
        let all = report.aggregate_of(&format!("{which}_all")).unwrap().mean;
        let predicted = active_share * act + (1.0 - active_share) * 0.5;
        report.check(
            &format!("{which}_mask_arithmetic"),
            (all - predicted).abs() <= 0.02,
            format!("all={all:.4} vs 0.2*active+0.4={predicted:.4}"),
        );
    }
    Ok(report)
}
