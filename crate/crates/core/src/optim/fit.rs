use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, BatchConfig, FitReport};
use crate::data::{Dataset, SparseVector};
use crate::error::{contract, Error, Result};
use crate::glm::{dataset_nll_grad, Family};
use crate::noising::{quad_penalty_value_grad, seed, NoiseModel, MAX_ENUMERATION_SUPPORT};

/// What gets added to the summed loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyMode {
    None,
    /// `(λ/2)‖β‖²`, so `λ = σ²n` reproduces additive-noise linear regression.
    L2 { lambda: f64 },
    /// The quadratic surrogate `R^q`.
    QuadNoising { noise: NoiseModel },
    /// The exact penalty `R` (dropout enumeration or Gauss–Hermite).
    ExactNoising { noise: NoiseModel },
    /// Sample-average approximation of the noised loss with fixed draws.
    McNoising { noise: NoiseModel, samples: usize, seed: u64 },
}

impl PenaltyMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            PenaltyMode::None => Ok(()),
            PenaltyMode::L2 { lambda } if !(*lambda >= 0.0 && lambda.is_finite()) => {
                Err(contract(format!("l2 strength must be >= 0, got {lambda}")))
            }
            PenaltyMode::L2 { .. } => Ok(()),
            PenaltyMode::QuadNoising { noise } | PenaltyMode::ExactNoising { noise } => noise.validate(),
            PenaltyMode::McNoising { noise, samples, .. } => {
                if *samples == 0 {
                    return Err(contract("mc_noising needs at least one sample"));
                }
                noise.validate()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyMode::None => "none",
            PenaltyMode::L2 { .. } => "l2",
            PenaltyMode::QuadNoising { .. } => "quad_noising",
            PenaltyMode::ExactNoising { .. } => "exact_noising",
            PenaltyMode::McNoising { .. } => "mc_noising",
        }
    }
}

fn add_into(acc: &mut [f64], other: &[f64]) {
    acc.iter_mut().zip(other).for_each(|(a, b)| *a += b);
}

/// Exact penalty and its gradient.
///
/// Dropout: enumerate keep patterns, `∇E[A(x̃·β)] = E[A'(x̃·β) x̃]`.
/// Additive: with `z ~ N(x·β, σ²‖β‖²)`, Stein's identity gives
/// `∇E[A(z)] = E[A'(z)] x + σ² E[A''(z)] β`.
pub fn exact_penalty_value_grad(
    family: Family,
    rows: &[SparseVector],
    beta: &[f64],
    noise: &NoiseModel,
) -> Result<(f64, Vec<f64>)> {
    noise.validate()?;
    let mut value = 0.0;
    let mut grad = vec![0.0; beta.len()];
    match *noise {
        NoiseModel::Dropout { delta } => {
            let keep = 1.0 / (1.0 - delta);
            for (row, x) in rows.iter().enumerate() {
                let k = x.nnz();
                if k > MAX_ENUMERATION_SUPPORT {
                    return Err(Error::Capacity { row, support: k, max: MAX_ENUMERATION_SUPPORT });
                }
                let idx = x.indices();
                let vals = x.values();
                let clean = family.partition(x.dot(beta))?;
                value -= clean.a;
                for (j, v) in x.iter() {
                    grad[j] -= clean.a1 * v;
                }
                for mask in 0u32..(1u32 << k) {
                    let kept = mask.count_ones() as i32;
                    let prob = (1.0 - delta).powi(kept) * delta.powi(k as i32 - kept);
                    if prob == 0.0 {
                        continue;
                    }
                    let mut z = 0.0;
                    for b in 0..k {
                        if mask >> b & 1 == 1 {
                            z += vals[b] * beta[idx[b]];
                        }
                    }
                    let p = family.partition(z * keep)?;
                    value += prob * p.a;
                    for b in 0..k {
                        if mask >> b & 1 == 1 {
                            grad[idx[b]] += prob * p.a1 * vals[b] * keep;
                        }
                    }
                }
            }
        }
        NoiseModel::AdditiveGaussian { sigma2 } => {
            let rule = crate::noising::quadrature::GaussHermite::shared();
            let var = sigma2 * beta.iter().map(|b| b * b).sum::<f64>();
            let sd = var.sqrt();
            let mut curv_total = 0.0;
            for x in rows {
                let mu = x.dot(beta);
                let clean = family.partition(mu)?;
                let (ea, ea1, ea2) = if var == 0.0 {
                    (clean.a, clean.a1, clean.a2)
                } else if family == Family::Poisson {
                    let e = family.partition(mu + 0.5 * var)?.a;
                    (e, e, e)
                } else {
                    let ea = rule.try_expect(mu, sd, |z| family.partition(z).map(|p| p.a - clean.a))? + clean.a;
                    let ea1 = rule.try_expect(mu, sd, |z| family.partition(z).map(|p| p.a1))?;
                    let ea2 = rule.try_expect(mu, sd, |z| family.partition(z).map(|p| p.a2))?;
                    (ea, ea1, ea2)
                };
                value += ea - clean.a;
                for (j, v) in x.iter() {
                    grad[j] += (ea1 - clean.a1) * v;
                }
                curv_total += ea2;
            }
            for (g, b) in grad.iter_mut().zip(beta) {
                *g += sigma2 * curv_total * b;
            }
        }
    }
    Ok((value, grad))
}

/// Sample-average noised loss and gradient with noise regenerated from
/// per-(example, sample) seeds on every call.
fn mc_objective_value_grad(
    family: Family,
    data: &Dataset,
    beta: &[f64],
    noise: &NoiseModel,
    samples: usize,
    master: u64,
) -> Result<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = vec![0.0; beta.len()];
    let scale = 1.0 / samples as f64;
    for s in 0..samples {
        for (i, (x, y)) in data.iter().enumerate() {
            let xt = crate::noising::draw_noised_seeded(x, noise, seed::mix(master, i as u64, s as u64));
            let z = xt.dot(beta);
            let p = family.partition(z)?;
            value += scale * (p.a - y * z);
            let r = scale * (p.a1 - y);
            for (j, v) in xt.iter() {
                grad[j] += r * v;
            }
        }
    }
    Ok((value, grad))
}

/// Loss plus penalty, with gradient.
pub fn penalized_objective(
    family: Family,
    data: &Dataset,
    mode: &PenaltyMode,
    beta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match *mode {
        PenaltyMode::McNoising { noise, samples, seed } => {
            mc_objective_value_grad(family, data, beta, &noise, samples, seed)
        }
        _ => {
            let (mut value, mut grad) = dataset_nll_grad(family, data, beta)?;
            match *mode {
                PenaltyMode::None | PenaltyMode::McNoising { .. } => {}
                PenaltyMode::L2 { lambda } => {
                    value += 0.5 * lambda * beta.iter().map(|b| b * b).sum::<f64>();
                    add_into(&mut grad, &beta.iter().map(|b| lambda * b).collect::<Vec<_>>());
                }
                PenaltyMode::QuadNoising { noise } => {
                    let (pv, pg) = quad_penalty_value_grad(family, data.rows(), beta, &noise)?;
                    value += pv;
                    add_into(&mut grad, &pg);
                }
                PenaltyMode::ExactNoising { noise } => {
                    let (pv, pg) = exact_penalty_value_grad(family, data.rows(), beta, &noise)?;
                    value += pv;
                    add_into(&mut grad, &pg);
                }
            }
            Ok((value, grad))
        }
    }
}

/// Starting points for a fit: zero, then seeded small Gaussian perturbations.
pub(crate) fn start_points(dim: usize, config: &BatchConfig) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![0.0; dim]];
    let normal = Normal::new(0.0, 0.1).expect("valid sd");
    for k in 1..config.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::stream(config.start_seed, k as u64));
        starts.push((0..dim).map(|_| normal.sample(&mut rng)).collect());
    }
    starts
}

/// Run `minimize` from every configured start and keep the lowest objective.
pub(crate) fn best_of_starts<F>(dim: usize, config: &BatchConfig, mut objective: F) -> Result<FitReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut best: Option<FitReport> = None;
    for start in start_points(dim, config) {
        let r = minimize(&mut objective, &start, config)?;
        if best.as_ref().is_none_or(|b| r.objective() < b.objective()) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Fit a GLM by minimizing `Σ_i ℓ(x_i, y_i; β) + penalty(β)`.
pub fn fit_glm(family: Family, data: &Dataset, mode: &PenaltyMode, config: &BatchConfig) -> Result<FitReport> {
    mode.validate()?;
    if data.is_empty() {
        return Err(contract("cannot fit on an empty dataset"));
    }
    family.check_labels(data.labels())?;
    best_of_starts(data.dim(), config, |b| penalized_objective(family, data, mode, b))
}
