//! Feature-noising regularization for generalized linear models.
//!
//! Dropout and additive Gaussian feature noise, applied to a GLM, reduce to
//! a label-free penalty on the weights. The crate evaluates that penalty
//! exactly and through its quadratic surrogate, fits penalized models in
//! batch and online, builds a semi-supervised version of the penalty from
//! unlabeled rows, and ships the experiment harness used by the CLI.

// `!(x > 0.0)` is the idiom for "rejects NaN too".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod glm;
pub mod model;
pub mod noising;
pub mod optim;
pub mod semisup;
pub mod simgen;

pub use data::{Dataset, ScalingMode, ScalingReport, SparseVector};
pub use error::{Error, Result};
pub use glm::{Family, Partition, Prediction};
pub use noising::{McEstimate, NoiseModel, PenaltyMethod, PenaltyValue};
pub use optim::{BatchConfig, FitReport, OnlineRule, OnlineTrajectory, PenaltyMode};
pub use semisup::{DiscountAlpha, UnlabeledSet};
pub use simgen::SimConfig;
