//! Desk-scale experiment harness. Every runner is deterministic in its seed
//! and returns an [`ExperimentReport`]; independent runs execute on the rayon
//! pool and are reassembled in run order.

mod fig1a;
mod fisher;
mod report;
mod semisup;
mod table3;
mod trace;

pub use fig1a::{run_fig1a, Fig1aConfig};
pub use fisher::{relative_gap, run_fisher_compare, FisherConfig};
pub use report::{mean_and_se, median, pearson, Aggregate, Check, ExperimentReport};
pub use semisup::{run_semisup_trials, run_variance_reduction, SemisupTrialConfig, VarianceConfig};
pub use table3::{run_table3, Table3Config};
pub use trace::{run_penalty_trace, run_trace_task, TraceConfig};

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configuration serializes")
}
