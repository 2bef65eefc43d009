//! Saved models and their evaluation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{contract, Result};
use crate::glm::{predict, Family};
use crate::noising::NoiseModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: String,
    pub param: f64,
}

impl From<NoiseModel> for NoiseSpec {
    fn from(n: NoiseModel) -> Self {
        Self { kind: n.kind().to_string(), param: n.param() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub family: Family,
    /// Name of the penalty the model was trained with.
    pub penalty: String,
    pub noise: Option<NoiseSpec>,
    pub dim: usize,
    pub beta: Vec<f64>,
    /// Per-column factors applied to every row before prediction.
    pub scaling: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_path: Option<String>,
}

impl Model {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Model = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.beta.len() != m.dim || m.scaling.len() != m.dim {
            return Err(contract("model beta/scaling lengths disagree with dim"));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub mean_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_squared_error: Option<f64>,
}

/// Score `model` on `data`, optionally restricted to rows where `mask` is true.
pub fn evaluate(model: &Model, data: &Dataset, mask: Option<&[bool]>) -> Result<EvalReport> {
    if data.dim() != model.dim {
        return Err(contract(format!(
            "model has dimension {} but data has {}",
            model.dim,
            data.dim()
        )));
    }
    if let Some(m) = mask {
        if m.len() != data.len() {
            return Err(contract(format!("mask has {} entries for {} rows", m.len(), data.len())));
        }
    }
    let (mut rows, mut hits, mut loss, mut sq) = (0usize, 0usize, 0.0, 0.0);
    for (k, (x, y)) in data.iter().enumerate() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        let x = x.scaled(&model.scaling);
        let z = x.dot(&model.beta);
        let p = model.family.partition(z)?;
        loss += p.a - y * z;
        let pred = predict(model.family, &x, &model.beta)?;
        if pred.label == y {
            hits += 1;
        }
        sq += (pred.mean - y).powi(2);
        rows += 1;
    }
    if rows == 0 {
        return Err(contract("no rows to evaluate"));
    }
    let n = rows as f64;
    Ok(EvalReport {
        rows,
        accuracy: (model.family == Family::Logistic).then(|| hits as f64 / n),
        mean_loss: loss / n,
        mean_squared_error: (model.family == Family::Linear).then(|| sq / n),
    })
}

/// Fraction of rows (restricted by `mask`) where the clean-feature logistic
/// prediction matches the label.
pub fn accuracy(beta: &[f64], data: &Dataset, mask: Option<&[bool]>) -> f64 {
    let mut hits = 0usize;
    let mut rows = 0usize;
    for (k, (x, y)) in data.iter().enumerate() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        let label = if x.dot(beta) >= 0.0 { 1.0 } else { 0.0 };
        hits += usize::from(label == y);
        rows += 1;
    }
    if rows == 0 {
        f64::NAN
    } else {
        hits as f64 / rows as f64
    }
}
