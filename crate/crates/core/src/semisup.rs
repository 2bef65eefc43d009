//! Semi-supervised noising penalty.
//!
//! The noising penalty ignores labels, so unlabeled rows can sharpen its
//! estimate. With `n` labeled and `m` unlabeled rows and discount `α`,
//!
//! ```text
//! R_*(β) = n / (n + α m) · (R(β) + α R_unlabeled(β))
//! ```
//!
//! Both parts use the quadratic surrogate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{scaling_from_rows, Dataset, ScalingMode, ScalingReport, SparseVector};
use crate::error::{contract, Result};
use crate::glm::{dataset_nll_grad, predict, Family};
use crate::noising::{
    exact_penalty_rows, quad_penalty_value_grad, seed, NoiseModel, PenaltyMethod, PenaltyValue,
};
use crate::optim::{best_of_starts, BatchConfig, FitReport};

/// Default cross-validation grid for the discount.
pub const DEFAULT_ALPHA_GRID: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledSet {
    rows: Vec<SparseVector>,
    dim: usize,
}

impl UnlabeledSet {
    pub fn new(rows: Vec<SparseVector>, dim: usize) -> Result<Self> {
        if rows.iter().any(|r| r.dim() != dim) {
            return Err(contract("unlabeled rows must share one dimension"));
        }
        Ok(Self { rows, dim })
    }

    pub fn empty(dim: usize) -> Self {
        Self { rows: Vec::new(), dim }
    }

    /// Keep the rows of a dataset and forget its labels.
    pub fn from_dataset(data: &Dataset) -> Self {
        Self { rows: data.rows().to_vec(), dim: data.dim() }
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(&self, scaling: &ScalingReport) -> Self {
        Self { rows: self.rows.iter().map(|r| scaling.apply_row(r)).collect(), dim: self.dim }
    }
}

/// Discount for unlabeled rows, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DiscountAlpha(f64);

impl DiscountAlpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(contract(format!("discount must lie in (0, 1], got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Column scaling computed on labeled and unlabeled rows together.
pub fn union_scaling(labeled: &Dataset, unlabeled: &UnlabeledSet, mode: ScalingMode) -> ScalingReport {
    scaling_from_rows(labeled.rows().iter().chain(unlabeled.rows()), labeled.dim(), mode)
}

fn check_dims(labeled: &Dataset, unlabeled: &UnlabeledSet, beta: &[f64]) -> Result<()> {
    if unlabeled.dim() != labeled.dim() || labeled.dim() != beta.len() {
        return Err(contract(format!(
            "dimension mismatch: labeled {}, unlabeled {}, weights {}",
            labeled.dim(),
            unlabeled.dim(),
            beta.len()
        )));
    }
    Ok(())
}

fn weight(n: usize, m: usize, alpha: DiscountAlpha) -> f64 {
    n as f64 / (n as f64 + alpha.get() * m as f64)
}

/// `R^q_*` and its gradient.
pub fn semisup_quad_penalty_value_grad(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    beta: &[f64],
    noise: &NoiseModel,
    alpha: DiscountAlpha,
) -> Result<(f64, Vec<f64>)> {
    check_dims(labeled, unlabeled, beta)?;
    let (lv, mut lg) = quad_penalty_value_grad(family, labeled.rows(), beta, noise)?;
    if unlabeled.is_empty() {
        return Ok((lv, lg));
    }
    let (uv, ug) = quad_penalty_value_grad(family, unlabeled.rows(), beta, noise)?;
    let w = weight(labeled.len(), unlabeled.len(), alpha);
    let a = alpha.get();
    lg.iter_mut().zip(&ug).for_each(|(l, u)| *l = w * (*l + a * u));
    Ok((w * (lv + a * uv), lg))
}

pub fn semisup_quad_penalty(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    beta: &[f64],
    noise: &NoiseModel,
    alpha: DiscountAlpha,
) -> Result<PenaltyValue> {
    semisup_quad_penalty_value_grad(family, labeled, unlabeled, beta, noise, alpha)
        .map(|(value, _)| PenaltyValue { value, method: PenaltyMethod::Quadratic })
}

/// `R_*` with the exact penalty on both parts; only practical for tiny supports.
pub fn semisup_exact_penalty(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    beta: &[f64],
    noise: &NoiseModel,
    alpha: DiscountAlpha,
) -> Result<PenaltyValue> {
    check_dims(labeled, unlabeled, beta)?;
    let l = exact_penalty_rows(family, labeled.rows(), beta, noise)?;
    if unlabeled.is_empty() {
        return Ok(l);
    }
    let u = exact_penalty_rows(family, unlabeled.rows(), beta, noise)?;
    let w = weight(labeled.len(), unlabeled.len(), alpha);
    Ok(PenaltyValue { value: w * (l.value + alpha.get() * u.value), method: l.method })
}

/// Labeled loss plus the semi-supervised surrogate penalty, with gradient.
pub fn semisup_objective(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    beta: &[f64],
    noise: &NoiseModel,
    alpha: DiscountAlpha,
) -> Result<(f64, Vec<f64>)> {
    let (mut v, mut g) = dataset_nll_grad(family, labeled, beta)?;
    let (pv, pg) = semisup_quad_penalty_value_grad(family, labeled, unlabeled, beta, noise, alpha)?;
    v += pv;
    g.iter_mut().zip(&pg).for_each(|(a, b)| *a += b);
    Ok((v, g))
}

pub fn fit_semisup(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    noise: &NoiseModel,
    alpha: DiscountAlpha,
    config: &BatchConfig,
) -> Result<FitReport> {
    noise.validate()?;
    if labeled.is_empty() {
        return Err(contract("cannot fit on an empty labeled set"));
    }
    family.check_labels(labeled.labels())?;
    check_dims(labeled, unlabeled, &vec![0.0; labeled.dim()])?;
    best_of_starts(labeled.dim(), config, |b| {
        semisup_objective(family, labeled, unlabeled, b, noise, alpha)
    })
}

/// Held-out score: accuracy for logistic, negative mean loss otherwise
/// (higher is better in both cases).
pub fn heldout_score(family: Family, data: &Dataset, beta: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(contract("empty evaluation set"));
    }
    let n = data.len() as f64;
    match family {
        Family::Logistic => {
            let mut hits = 0usize;
            for (x, y) in data.iter() {
                if predict(family, x, beta)?.label == y {
                    hits += 1;
                }
            }
            Ok(hits as f64 / n)
        }
        _ => Ok(-crate::glm::dataset_nll(family, data, beta)? / n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub alpha: f64,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelection {
    pub alpha: DiscountAlpha,
    pub table: Vec<CvRow>,
}

/// Pick the discount by k-fold cross-validation on the labeled rows. Folds
/// come from a seeded shuffle; ties go to the smaller `α`.
#[allow(clippy::too_many_arguments)]
pub fn select_alpha(
    family: Family,
    labeled: &Dataset,
    unlabeled: &UnlabeledSet,
    noise: &NoiseModel,
    grid: &[f64],
    folds: usize,
    seed: u64,
    config: &BatchConfig,
) -> Result<AlphaSelection> {
    if grid.is_empty() {
        return Err(contract("alpha grid is empty"));
    }
    let mut alphas = grid.iter().map(|&a| DiscountAlpha::new(a)).collect::<Result<Vec<_>>>()?;
    alphas.sort_by(|a, b| a.get().total_cmp(&b.get()));
    alphas.dedup();
    if alphas.len() == 1 {
        return Ok(AlphaSelection { alpha: alphas[0], table: Vec::new() });
    }
    if folds < 2 || folds > labeled.len() {
        return Err(contract(format!(
            "need 2 <= folds <= {} labeled rows, got {folds}",
            labeled.len()
        )));
    }
    if family == Family::Logistic {
        let first = labeled.labels()[0];
        if labeled.labels().iter().all(|&y| y == first) {
            return Err(contract("labeled data contains a single class"));
        }
    }
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::stream(seed, 0)));
    let splits: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|k| {
            let (test, train): (Vec<_>, Vec<_>) =
                order.iter().enumerate().partition(|(pos, _)| pos % folds == k);
            let pick = |v: Vec<(usize, &usize)>| v.into_iter().map(|(_, &i)| i).collect::<Vec<_>>();
            (labeled.subset(&pick(train)), labeled.subset(&pick(test)))
        })
        .collect();

    let mut table = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let mut scores = Vec::with_capacity(folds);
        for (train, test) in &splits {
            let fit = fit_semisup(family, train, unlabeled, noise, alpha, config)?;
            scores.push(heldout_score(family, test, &fit.beta_hat)?);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        table.push(CvRow { alpha: alpha.get(), fold_scores: scores, mean_score: mean });
    }
    let best = table
        .iter()
        .enumerate()
        .fold(0, |best, (k, row)| if row.mean_score > table[best].mean_score { k } else { best });
    Ok(AlphaSelection { alpha: alphas[best], table })
}
