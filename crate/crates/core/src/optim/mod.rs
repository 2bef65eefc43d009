//! Batch (L-BFGS) fitting of noising-regularized GLMs and the online rules
//! that connect dropout to AdaGrad.

mod fit;
mod lbfgs;
mod online;

pub use fit::{exact_penalty_value_grad, fit_glm, penalized_objective, PenaltyMode};
pub(crate) use fit::best_of_starts;
pub use lbfgs::{minimize, minimize_observed, BatchConfig, FitReport};
pub use online::{
    apply_gradient, online_step, run_online, OnlineRule, OnlineState, OnlineTrajectory, Schedule,
    DEFAULT_EPSILON,
};
