//! Online updates: plain SGD, diagonal AdaGrad, and dropout descent.
//!
//! Dropout descent solves the linearized problem with the quadratic noising
//! penalty centered at the current iterate, which has the closed form
//! `β − η diag(H_t)^{-1} g_t` with `H_t = Σ_{s≤t} ∇²ℓ_s(β_t)` kept as a
//! running diagonal.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SparseVector};
use crate::error::{contract, Result};
use crate::glm::Family;
use crate::noising::seed;

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// `η_t = η / √t`
    InvSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OnlineRule {
    Sgd { eta: f64, schedule: Schedule },
    Adagrad { eta: f64, epsilon: f64 },
    DropoutDescent { eta: f64, epsilon: f64 },
}

impl OnlineRule {
    pub fn sgd(eta: f64) -> Self {
        OnlineRule::Sgd { eta, schedule: Schedule::Constant }
    }

    pub fn adagrad(eta: f64) -> Self {
        OnlineRule::Adagrad { eta, epsilon: DEFAULT_EPSILON }
    }

    pub fn dropout_descent(eta: f64) -> Self {
        OnlineRule::DropoutDescent { eta, epsilon: DEFAULT_EPSILON }
    }

    pub fn validate(&self) -> Result<()> {
        let (eta, eps) = match *self {
            OnlineRule::Sgd { eta, .. } => (eta, 0.0),
            OnlineRule::Adagrad { eta, epsilon } | OnlineRule::DropoutDescent { eta, epsilon } => {
                (eta, epsilon)
            }
        };
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(contract(format!("learning rate must be >= 0, got {eta}")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(contract(format!("epsilon must be >= 0, got {eps}")));
        }
        Ok(())
    }
}

/// Iterate plus both diagonal accumulators; every rule maintains both so the
/// two Fisher estimates can be compared on any trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineState {
    pub beta: Vec<f64>,
    /// `Σ_t g_t²`
    pub diag_g: Vec<f64>,
    /// `Σ_t A''(x_t·β_t) x_t²`
    pub diag_h: Vec<f64>,
    pub t: usize,
}

impl OnlineState {
    pub fn new(beta0: Vec<f64>) -> Self {
        let d = beta0.len();
        Self { beta: beta0, diag_g: vec![0.0; d], diag_h: vec![0.0; d], t: 0 }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }
}

/// Move `state.beta` along `-grad` using the rule's preconditioner and the
/// accumulators as they stand. `grad` is sparse: untouched coordinates do not move.
pub fn apply_gradient(rule: &OnlineRule, state: &mut OnlineState, grad: &SparseVector) {
    match *rule {
        OnlineRule::Sgd { eta, schedule } => {
            let eta_t = match schedule {
                Schedule::Constant => eta,
                Schedule::InvSqrt => eta / (state.t.max(1) as f64).sqrt(),
            };
            for (j, g) in grad.iter() {
                state.beta[j] -= eta_t * g;
            }
        }
        OnlineRule::Adagrad { eta, epsilon } => {
            for (j, g) in grad.iter() {
                state.beta[j] -= eta * g / (state.diag_g[j].sqrt() + epsilon);
            }
        }
        OnlineRule::DropoutDescent { eta, epsilon } => {
            for (j, g) in grad.iter() {
                state.beta[j] -= eta * g / (state.diag_h[j] + epsilon);
            }
        }
    }
}

/// One online update on `(x, y)`. Returns the loss at the pre-update iterate.
pub fn online_step(
    rule: &OnlineRule,
    state: &mut OnlineState,
    x: &SparseVector,
    y: f64,
    family: Family,
) -> Result<f64> {
    if x.dim() != state.beta.len() {
        return Err(contract("example dimension does not match the online state"));
    }
    let z = x.dot(&state.beta);
    let p = family.partition(z)?;
    let loss = p.a - y * z;
    let r = p.a1 - y;
    let grad = SparseVector::new(
        x.indices().to_vec(),
        x.values().iter().map(|v| r * v).collect(),
        x.dim(),
    )?;
    state.t += 1;
    for (j, v) in x.iter() {
        state.diag_g[j] += (r * v).powi(2);
        state.diag_h[j] += p.a2 * v * v;
    }
    apply_gradient(rule, state, &grad);
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineTrajectory {
    /// `β_0, β_1, …`; one entry per processed example plus the start.
    pub betas: Vec<Vec<f64>>,
    /// Running sum of pre-update losses, one entry per processed example.
    pub cumulative_loss: Vec<f64>,
    pub final_state: OnlineState,
}

/// Process `passes` shuffled passes over `data` from `β = 0`. The order of
/// pass `k` is a permutation drawn from `seed::stream(seed, k)`.
pub fn run_online(
    rule: &OnlineRule,
    data: &Dataset,
    passes: usize,
    family: Family,
    seed: u64,
) -> Result<OnlineTrajectory> {
    rule.validate()?;
    if passes == 0 {
        return Err(contract("passes must be positive"));
    }
    family.check_labels(data.labels())?;
    let mut state = OnlineState::zeros(data.dim());
    let mut betas = Vec::with_capacity(passes * data.len() + 1);
    betas.push(state.beta.clone());
    let mut cumulative_loss = Vec::with_capacity(passes * data.len());
    let mut total = 0.0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for pass in 0..passes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::stream(seed, pass as u64));
        order.shuffle(&mut rng);
        for &i in &order {
            total += online_step(rule, &mut state, &data.rows()[i], data.labels()[i], family)?;
            cumulative_loss.push(total);
            betas.push(state.beta.clone());
        }
    }
    Ok(OnlineTrajectory { betas, cumulative_loss, final_state: state })
}
