//! Exponential-family GLMs `p(y | x) = h(y) exp{y·x·β − A(x·β)}`.
//!
//! Losses drop the `−log h(y)` term: it does not depend on β, so every
//! optimum and every noising penalty is unchanged.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SparseVector};
use crate::error::{contract, Error, Result};

/// Largest natural parameter the Poisson family accepts before `e^z` is
/// treated as a modeling error.
pub const POISSON_Z_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Logistic,
    Poisson,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Linear => "linear",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            other => Err(contract(format!("unknown family {other:?}"))),
        }
    }
}

/// `A(z)` and its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Linear, Family::Logistic, Family::Poisson];

    pub fn partition(self, z: f64) -> Result<Partition> {
        if !z.is_finite() {
            return Err(Error::Range { family: self, z });
        }
        Ok(match self {
            Family::Linear => Partition { a: 0.5 * z * z, a1: z, a2: 1.0, a3: 0.0 },
            Family::Logistic => {
                let p = sigmoid(z);
                let v = p * (1.0 - p);
                Partition { a: softplus(z), a1: p, a2: v, a3: v * (1.0 - 2.0 * p) }
            }
            Family::Poisson => {
                if z > POISSON_Z_MAX {
                    return Err(Error::Range { family: self, z });
                }
                let e = z.exp();
                Partition { a: e, a1: e, a2: e, a3: e }
            }
        })
    }

    /// `A(z)` alone; same guard as [`Family::partition`].
    pub fn log_partition(self, z: f64) -> Result<f64> {
        match self {
            Family::Linear => Ok(0.5 * z * z),
            Family::Logistic => Ok(softplus(z)),
            Family::Poisson => self.partition(z).map(|p| p.a),
        }
    }

    pub fn check_label(self, y: f64) -> Result<()> {
        let ok = match self {
            Family::Linear => y.is_finite(),
            Family::Logistic => y == 0.0 || y == 1.0,
            Family::Poisson => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(contract(format!("label {y} is not valid for the {self} family")))
        }
    }

    pub fn check_labels(self, labels: &[f64]) -> Result<()> {
        labels.iter().try_for_each(|&y| self.check_label(y))
    }
}

/// Convenience wrapper matching [`Family::partition`].
pub fn partition_derivatives(family: Family, z: f64) -> Result<Partition> {
    family.partition(z)
}

fn check_dim(x: &SparseVector, beta: &[f64]) -> Result<()> {
    if x.dim() != beta.len() {
        return Err(contract(format!(
            "feature dimension {} does not match weight dimension {}",
            x.dim(),
            beta.len()
        )));
    }
    Ok(())
}

/// `−y·(x·β) + A(x·β)`.
pub fn example_loss(family: Family, x: &SparseVector, y: f64, beta: &[f64]) -> Result<f64> {
    check_dim(x, beta)?;
    family.check_label(y)?;
    let z = x.dot(beta);
    Ok(family.log_partition(z)? - y * z)
}

/// Summed loss and its gradient `Σ_i (A'(x_i·β) − y_i) x_i`.
pub fn dataset_nll_grad(family: Family, data: &Dataset, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(contract("dataset is empty"));
    }
    if data.dim() != beta.len() {
        return Err(contract(format!(
            "dataset dimension {} does not match weight dimension {}",
            data.dim(),
            beta.len()
        )));
    }
    family.check_labels(data.labels())?;
    let mut value = 0.0;
    let mut grad = vec![0.0; beta.len()];
    for (x, y) in data.iter() {
        let z = x.dot(beta);
        let p = family.partition(z)?;
        value += p.a - y * z;
        let r = p.a1 - y;
        for (j, v) in x.iter() {
            grad[j] += r * v;
        }
    }
    Ok((value, grad))
}

/// Loss only; skips the gradient allocation.
pub fn dataset_nll(family: Family, data: &Dataset, beta: &[f64]) -> Result<f64> {
    data.iter()
        .map(|(x, y)| {
            let z = x.dot(beta);
            Ok(family.log_partition(z)? - y * z)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub label: f64,
}

/// Clean-feature prediction. Logistic ties at 0.5 go to label 1; Poisson
/// predicts `floor(e^{x·β})`.
pub fn predict(family: Family, x: &SparseVector, beta: &[f64]) -> Result<Prediction> {
    check_dim(x, beta)?;
    let mean = family.partition(x.dot(beta))?.a1;
    let label = match family {
        Family::Linear => mean,
        Family::Logistic => {
            if mean >= 0.5 {
                1.0
            } else {
                0.0
            }
        }
        Family::Poisson => mean.floor(),
    };
    Ok(Prediction { mean, label })
}

/// Diagonals of the summed Hessian `Σ A''(x_i·β) x_i²` and of the summed
/// gradient outer product `Σ (A'(x_i·β) − y_i)² x_i²`.
pub fn fisher_diagonals(
    family: Family,
    data: &Dataset,
    beta: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if data.is_empty() {
        return Err(contract("dataset is empty"));
    }
    let d = beta.len();
    let mut diag_h = vec![0.0; d];
    let mut diag_g = vec![0.0; d];
    for (x, y) in data.iter() {
        check_dim(x, beta)?;
        let p = family.partition(x.dot(beta))?;
        let r2 = (p.a1 - y).powi(2);
        for (j, v) in x.iter() {
            let v2 = v * v;
            diag_h[j] += p.a2 * v2;
            diag_g[j] += r2 * v2;
        }
    }
    Ok((diag_h, diag_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x1(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    #[test]
    fn partition_reference_points() {
        let p = Family::Logistic.partition(0.0).unwrap();
        assert_abs_diff_eq!(p.a, std::f64::consts::LN_2, epsilon = 1e-6);
        assert_eq!((p.a1, p.a2, p.a3), (0.5, 0.25, 0.0));

        let p = Family::Linear.partition(3.0).unwrap();
        assert_eq!((p.a, p.a1, p.a2, p.a3), (4.5, 3.0, 1.0, 0.0));

        let p = Family::Poisson.partition(0.0).unwrap();
        assert_eq!((p.a, p.a1, p.a2, p.a3), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn poisson_guard() {
        assert!(Family::Poisson.partition(30.0).is_ok());
        let err = Family::Poisson.partition(30.5).unwrap_err();
        match err {
            Error::Range { family, z } => {
                assert_eq!(family, Family::Poisson);
                assert_eq!(z, 30.5);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(Family::Poisson.partition(31.0).unwrap_err().to_string().contains("poisson"));
    }

    #[test]
    fn logistic_extremes_are_finite() {
        for z in [-800.0, -40.0, 40.0, 800.0] {
            let p = Family::Logistic.partition(z).unwrap();
            assert!(p.a.is_finite() && p.a2 >= 0.0);
        }
        assert_abs_diff_eq!(Family::Logistic.partition(800.0).unwrap().a, 800.0);
    }

    #[test]
    fn losses() {
        let beta = [0.0];
        assert_abs_diff_eq!(
            example_loss(Family::Logistic, &x1(&[1.0]), 1.0, &beta).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_eq!(example_loss(Family::Linear, &x1(&[1.0]), 1.0, &beta).unwrap(), 0.0);
        // x·β = 2, y = 0; −log of 1 − σ(2)
        let l = example_loss(Family::Logistic, &x1(&[1.0]), 0.0, &[2.0]).unwrap();
        assert_abs_diff_eq!(l, 2.126928, epsilon = 1e-6);
        assert_abs_diff_eq!(l, -(1.0 - sigmoid(2.0)).ln(), epsilon = 1e-12);
    }

    #[test]
    fn label_and_dimension_contracts() {
        assert!(example_loss(Family::Logistic, &x1(&[1.0]), 0.5, &[0.0]).is_err());
        assert!(example_loss(Family::Poisson, &x1(&[1.0]), -1.0, &[0.0]).is_err());
        assert!(example_loss(Family::Linear, &x1(&[1.0, 2.0]), 0.0, &[0.0]).is_err());
        let empty = Dataset::new(vec![], vec![], 1).unwrap();
        assert!(matches!(
            dataset_nll_grad(Family::Linear, &empty, &[0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn single_example_gradient() {
        let d = Dataset::from_dense(&[vec![1.0]], vec![1.0]).unwrap();
        let (v, g) = dataset_nll_grad(Family::Logistic, &d, &[0.0]).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-6);
        assert_eq!(g, vec![-0.5]);
    }

    #[test]
    fn least_squares_optimum_has_zero_gradient() {
        // two columns, exact normal-equation solution computed by hand
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let y = vec![1.0, 2.0, 2.0];
        // XᵀX = [[3,3],[3,5]], Xᵀy = [5,6] → β = (7/6, 1/2)
        let d = Dataset::from_dense(&rows, y).unwrap();
        let (_, g) = dataset_nll_grad(Family::Linear, &d, &[7.0 / 6.0, 0.5]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }

    #[test]
    fn predictions() {
        let p = predict(Family::Logistic, &x1(&[1.0]), &[1.0]).unwrap();
        assert_abs_diff_eq!(p.mean, 0.731059, epsilon = 1e-6);
        assert_eq!(p.label, 1.0);
        let p = predict(Family::Logistic, &x1(&[1.0]), &[0.0]).unwrap();
        assert_eq!((p.mean, p.label), (0.5, 1.0));
        let p = predict(Family::Linear, &x1(&[1.0]), &[-2.5]).unwrap();
        assert_eq!((p.mean, p.label), (-2.5, -2.5));
        let p = predict(Family::Poisson, &x1(&[1.0]), &[1.0]).unwrap();
        assert_eq!(p.label, 2.0);
    }

    #[test]
    fn fisher_single_example() {
        let d = Dataset::from_dense(&[vec![2.0]], vec![1.0]).unwrap();
        let (h, g) = fisher_diagonals(Family::Logistic, &d, &[0.0]).unwrap();
        assert_eq!(h, vec![1.0]);
        assert_eq!(g, vec![1.0]);
    }

    #[test]
    fn inactive_feature_has_zero_fisher() {
        let d = Dataset::from_dense(&[vec![1.0, 0.0], vec![-2.0, 0.0]], vec![1.0, 0.0]).unwrap();
        for fam in Family::ALL {
            let (h, g) = fisher_diagonals(fam, &d, &[0.3, 0.7]).unwrap();
            assert_eq!((h[1], g[1]), (0.0, 0.0));
        }
    }

    #[test]
    fn family_parse_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("gamma".parse::<Family>().is_err());
    }
}
