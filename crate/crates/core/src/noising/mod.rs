//! Feature-noising models and the penalties they induce on a GLM.
//!
//! For a mean-preserving noise `x̃ = ν(x, ξ)` the expected loss splits into
//! the clean loss plus a label-free penalty
//! `R(β) = Σ_i E[A(x̃_i·β)] − A(x_i·β)`. This module evaluates `R` exactly
//! (dropout enumeration, Gauss–Hermite for additive noise), by Monte Carlo,
//! and through its second-order surrogate `R^q = ½ Σ_i A''(x_i·β) Var[x̃_i·β]`.

pub mod quadrature;
pub mod seed;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SparseVector};
use crate::error::{contract, Error, Result};
use crate::glm::Family;
use quadrature::GaussHermite;

/// Largest active support enumerated exactly under dropout (`2^20` patterns).
pub const MAX_ENUMERATION_SUPPORT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `x̃ = x + ε`, `ε ~ N(0, σ² I)`.
    AdditiveGaussian { sigma2: f64 },
    /// Each coordinate is zeroed with probability `delta`, else scaled by `1/(1−delta)`.
    Dropout { delta: f64 },
}

impl NoiseModel {
    pub fn additive(sigma2: f64) -> Result<Self> {
        let n = NoiseModel::AdditiveGaussian { sigma2 };
        n.validate()?;
        Ok(n)
    }

    pub fn dropout(delta: f64) -> Result<Self> {
        let n = NoiseModel::Dropout { delta };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::AdditiveGaussian { sigma2 } if !(sigma2 >= 0.0 && sigma2.is_finite()) => {
                Err(contract(format!("additive noise variance must be >= 0, got {sigma2}")))
            }
            NoiseModel::Dropout { delta } if !(0.0..1.0).contains(&delta) => {
                Err(contract(format!("dropout probability must lie in [0, 1), got {delta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match *self {
            NoiseModel::AdditiveGaussian { sigma2 } => sigma2 == 0.0,
            NoiseModel::Dropout { delta } => delta == 0.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseModel::AdditiveGaussian { .. } => "additive_gaussian",
            NoiseModel::Dropout { .. } => "dropout",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            NoiseModel::AdditiveGaussian { sigma2 } => sigma2,
            NoiseModel::Dropout { delta } => delta,
        }
    }

    /// `δ/(1−δ)` for dropout; `σ²` for additive noise.
    fn variance_factor(&self) -> f64 {
        match *self {
            NoiseModel::AdditiveGaussian { sigma2 } => sigma2,
            NoiseModel::Dropout { delta } => delta / (1.0 - delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMethod {
    Enumeration,
    Quadrature,
    ClosedForm,
    MonteCarlo,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValue {
    pub value: f64,
    pub method: PenaltyMethod,
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// One noised copy of `x`. Additive noise touches all `d` coordinates, so the
/// result is generally dense.
pub fn draw_noised<R: Rng + ?Sized>(x: &SparseVector, noise: &NoiseModel, rng: &mut R) -> SparseVector {
    if noise.is_identity() {
        return x.clone();
    }
    match *noise {
        NoiseModel::AdditiveGaussian { sigma2 } => {
            let sd = sigma2.sqrt();
            let mut dense = x.to_dense();
            for v in dense.iter_mut() {
                let e: f64 = StandardNormal.sample(rng);
                *v += sd * e;
            }
            SparseVector::from_dense(&dense)
        }
        NoiseModel::Dropout { delta } => {
            let keep = 1.0 / (1.0 - delta);
            let (idx, vals): (Vec<usize>, Vec<f64>) = x
                .iter()
                .filter(|_| rng.random::<f64>() >= delta)
                .map(|(j, v)| (j, v * keep))
                .unzip();
            SparseVector::new(idx, vals, x.dim()).expect("subset of a valid vector")
        }
    }
}

/// [`draw_noised`] with a generator seeded from `seed`.
pub fn draw_noised_seeded(x: &SparseVector, noise: &NoiseModel, seed: u64) -> SparseVector {
    draw_noised(x, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `x̃·β` for one noise draw, without materializing `x̃`.
fn noised_dot<R: Rng + ?Sized>(x: &SparseVector, beta: &[f64], noise: &NoiseModel, rng: &mut R) -> f64 {
    match *noise {
        NoiseModel::AdditiveGaussian { sigma2 } => {
            let sd = sigma2.sqrt();
            let mut z = x.dot(beta);
            for &b in beta {
                let e: f64 = StandardNormal.sample(rng);
                z += sd * e * b;
            }
            z
        }
        NoiseModel::Dropout { delta } => {
            let keep = 1.0 / (1.0 - delta);
            x.iter()
                .filter(|_| rng.random::<f64>() >= delta)
                .map(|(j, v)| v * keep * beta[j])
                .sum()
        }
    }
}

fn check_inputs(rows: &[SparseVector], beta: &[f64], noise: &NoiseModel) -> Result<()> {
    noise.validate()?;
    if let Some(r) = rows.iter().find(|r| r.dim() != beta.len()) {
        return Err(contract(format!(
            "row dimension {} does not match weight dimension {}",
            r.dim(),
            beta.len()
        )));
    }
    Ok(())
}

fn welford(totals: impl Iterator<Item = f64>) -> McEstimate {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for t in totals {
        n += 1;
        let d = t - mean;
        mean += d / n as f64;
        m2 += d * (t - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate { mean, std_error: (var / n as f64).sqrt(), samples: n }
}

/// Monte Carlo estimate of the noised objective `Σ_i E[ℓ_{x̃_i, y_i}(β)]`.
///
/// Noise for example `i` in sample `s` is drawn from a generator seeded with
/// [`seed::mix`]`(seed, i, s)`, so results do not depend on evaluation order.
pub fn mc_noised_objective_estimate(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(contract("need at least one Monte Carlo sample"));
    }
    check_inputs(data.rows(), beta, noise)?;
    family.check_labels(data.labels())?;
    if noise.is_identity() {
        let v = crate::glm::dataset_nll(family, data, beta)?;
        return Ok(McEstimate { mean: v, std_error: 0.0, samples });
    }
    let mut totals = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut total = 0.0;
        for (i, (x, y)) in data.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed, i as u64, s as u64));
            let z = noised_dot(x, beta, noise, &mut rng);
            total += family.log_partition(z)? - y * z;
        }
        totals.push(total);
    }
    Ok(welford(totals.into_iter()))
}

pub fn mc_noised_objective(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    mc_noised_objective_estimate(family, data, beta, noise, samples, seed).map(|e| e.mean)
}

/// Monte Carlo estimate of the penalty `R(β)` alone; labels are not used.
pub fn mc_penalty(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(contract("need at least one Monte Carlo sample"));
    }
    check_inputs(rows, beta, noise)?;
    let clean: Vec<f64> = rows
        .iter()
        .map(|x| family.log_partition(x.dot(beta)))
        .collect::<Result<_>>()?;
    let mut totals = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut total = 0.0;
        for (i, x) in rows.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed, i as u64, s as u64));
            let z = noised_dot(x, beta, noise, &mut rng);
            total += family.log_partition(z)? - clean[i];
        }
        totals.push(total);
    }
    Ok(welford(totals.into_iter()))
}

/// The candidate label with the lowest Monte Carlo expected loss
/// `(1/S) Σ_s ℓ(x̃_s, y; β)`, using the same draws `x̃_s` for every candidate.
/// Ties keep the earlier candidate.
pub fn mc_expected_loss_prediction(
    family: Family,
    x: &SparseVector,
    beta: &[f64],
    noise: &NoiseModel,
    candidates: &[f64],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 || candidates.is_empty() {
        return Err(contract("need at least one sample and one candidate label"));
    }
    check_inputs(std::slice::from_ref(x), beta, noise)?;
    for &y in candidates {
        family.check_label(y)?;
    }
    let (mut mean_a, mut mean_z) = (0.0, 0.0);
    for s in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::stream(seed, s as u64));
        let z = noised_dot(x, beta, noise, &mut rng);
        mean_a += family.log_partition(z)?;
        mean_z += z;
    }
    mean_a /= samples as f64;
    mean_z /= samples as f64;
    let mut best = (candidates[0], mean_a - candidates[0] * mean_z);
    for &y in &candidates[1..] {
        let loss = mean_a - y * mean_z;
        if loss < best.1 {
            best = (y, loss);
        }
    }
    Ok(best.0)
}

/// `E[A(x̃·β)] − A(x·β)` for dropout by summing over all keep/drop patterns of
/// the active support.
fn dropout_row_penalty(family: Family, x: &SparseVector, beta: &[f64], delta: f64) -> Result<f64> {
    let contrib: Vec<f64> = x.iter().map(|(j, v)| v * beta[j]).collect();
    let k = contrib.len();
    let keep_scale = 1.0 / (1.0 - delta);
    let keep_pow: Vec<f64> = (0..=k).map(|m| (1.0 - delta).powi(m as i32)).collect();
    let drop_pow: Vec<f64> = (0..=k).map(|m| delta.powi(m as i32)).collect();
    let clean = family.log_partition(x.dot(beta))?;
    let mut expected = 0.0;
    for mask in 0u32..(1u32 << k) {
        let kept = mask.count_ones() as usize;
        let prob = keep_pow[kept] * drop_pow[k - kept];
        if prob == 0.0 {
            continue;
        }
        let mut z = 0.0;
        for (b, c) in contrib.iter().enumerate() {
            if mask >> b & 1 == 1 {
                z += c;
            }
        }
        expected += prob * family.log_partition(z * keep_scale)?;
    }
    Ok(expected - clean)
}

/// Additive Gaussian noise makes `x̃·β ~ N(x·β, σ²‖β‖²)`.
fn additive_row_penalty(
    family: Family,
    mean: f64,
    var: f64,
    rule: &GaussHermite,
) -> Result<f64> {
    if var == 0.0 {
        return Ok(0.0);
    }
    match family {
        // log-normal moment: E[e^{N(μ, v)}] = e^{μ + v/2}
        Family::Poisson => {
            let hi = family.log_partition(mean + 0.5 * var)?;
            Ok(hi - family.log_partition(mean)?)
        }
        _ => {
            let clean = family.log_partition(mean)?;
            rule.try_expect(mean, var.sqrt(), |z| family.log_partition(z).map(|a| a - clean))
        }
    }
}

/// Exact noising penalty `R(β)` over a set of rows using a given quadrature rule.
pub fn exact_penalty_rows_with(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
    rule: &GaussHermite,
) -> Result<PenaltyValue> {
    check_inputs(rows, beta, noise)?;
    match *noise {
        NoiseModel::Dropout { delta } => {
            if let Some((row, r)) = rows
                .iter()
                .enumerate()
                .find(|(_, r)| r.nnz() > MAX_ENUMERATION_SUPPORT)
            {
                return Err(Error::Capacity {
                    row,
                    support: r.nnz(),
                    max: MAX_ENUMERATION_SUPPORT,
                });
            }
            let mut total = 0.0;
            for x in rows {
                total += dropout_row_penalty(family, x, beta, delta)?;
            }
            Ok(PenaltyValue { value: total, method: PenaltyMethod::Enumeration })
        }
        NoiseModel::AdditiveGaussian { sigma2 } => {
            let var = sigma2 * beta.iter().map(|b| b * b).sum::<f64>();
            let mut total = 0.0;
            for x in rows {
                total += additive_row_penalty(family, x.dot(beta), var, rule)?;
            }
            let method = if family == Family::Poisson {
                PenaltyMethod::ClosedForm
            } else {
                PenaltyMethod::Quadrature
            };
            Ok(PenaltyValue { value: total, method })
        }
    }
}

pub fn exact_penalty_rows(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<PenaltyValue> {
    exact_penalty_rows_with(family, rows, beta, noise, GaussHermite::shared())
}

/// Exact noising penalty `R(β) = Σ_i E[A(x̃_i·β)] − A(x_i·β)`.
pub fn exact_penalty(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<PenaltyValue> {
    exact_penalty_rows(family, data.rows(), beta, noise)
}

/// `Var[x̃·β]`: `σ²‖β‖²` for additive noise, `δ/(1−δ) Σ_j x_j² β_j²` for dropout.
pub fn linearization_variance(x: &SparseVector, beta: &[f64], noise: &NoiseModel) -> f64 {
    match *noise {
        NoiseModel::AdditiveGaussian { sigma2 } => sigma2 * beta.iter().map(|b| b * b).sum::<f64>(),
        NoiseModel::Dropout { .. } => noise.variance_factor() * x.weighted_sq_norm(beta),
    }
}

/// Quadratic surrogate `R^q` and its gradient in one pass over the rows.
pub fn quad_penalty_value_grad(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<(f64, Vec<f64>)> {
    check_inputs(rows, beta, noise)?;
    let c = noise.variance_factor();
    let mut grad = vec![0.0; beta.len()];
    if c == 0.0 {
        return Ok((0.0, grad));
    }
    let mut value = 0.0;
    match noise {
        NoiseModel::Dropout { .. } => {
            // ½c Σ_i A''(z_i) q_i,  q_i = Σ_j x_ij² β_j²
            for x in rows {
                let p = family.partition(x.dot(beta))?;
                let q = x.weighted_sq_norm(beta);
                value += p.a2 * q;
                for (j, v) in x.iter() {
                    grad[j] += p.a3 * v * q + 2.0 * p.a2 * v * v * beta[j];
                }
            }
            value *= 0.5 * c;
            grad.iter_mut().for_each(|g| *g *= 0.5 * c);
        }
        NoiseModel::AdditiveGaussian { .. } => {
            // ½σ² ‖β‖² Σ_i A''(z_i)
            let norm2: f64 = beta.iter().map(|b| b * b).sum();
            let mut curv = 0.0;
            for x in rows {
                let p = family.partition(x.dot(beta))?;
                curv += p.a2;
                for (j, v) in x.iter() {
                    grad[j] += norm2 * p.a3 * v;
                }
            }
            value = 0.5 * c * norm2 * curv;
            for (g, b) in grad.iter_mut().zip(beta) {
                *g = 0.5 * c * (*g + 2.0 * curv * b);
            }
        }
    }
    Ok((value, grad))
}

pub fn quad_penalty_rows(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<PenaltyValue> {
    check_inputs(rows, beta, noise)?;
    let mut value = 0.0;
    for x in rows {
        let p = family.partition(x.dot(beta))?;
        value += p.a2 * linearization_variance(x, beta, noise);
    }
    Ok(PenaltyValue { value: 0.5 * value, method: PenaltyMethod::Quadratic })
}

/// Quadratic noising surrogate `R^q(β) = ½ Σ_i A''(x_i·β) Var[x̃_i·β]`.
pub fn quad_penalty(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<PenaltyValue> {
    quad_penalty_rows(family, data.rows(), beta, noise)
}

/// Analytic gradient of [`quad_penalty`].
pub fn quad_penalty_grad(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    quad_penalty_value_grad(family, data.rows(), beta, noise).map(|(_, g)| g)
}

/// Exact and quadratic penalties for one logistic example whose natural
/// parameter is perturbed by `N(0, σ²)`, with mean parameter `p`.
pub fn gaussian_logistic_penalty(p: f64, sigma2: f64) -> Result<(f64, f64)> {
    gaussian_logistic_penalty_with(p, sigma2, GaussHermite::shared())
}

pub fn gaussian_logistic_penalty_with(p: f64, sigma2: f64, rule: &GaussHermite) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(contract(format!("mean parameter must lie in (0, 1), got {p}")));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(contract(format!("variance must be >= 0, got {sigma2}")));
    }
    let mu = (p / (1.0 - p)).ln();
    let exact = additive_row_penalty(Family::Logistic, mu, sigma2, rule)?;
    let quadratic = 0.5 * p * (1.0 - p) * sigma2;
    Ok((exact, quadratic))
}

#[cfg(test)]
mod tests;
