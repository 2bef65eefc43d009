//! Gauss–Hermite quadrature for Gaussian expectations.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default node count used by the exact additive-noise penalty.
pub const DEFAULT_NODES: usize = 50;

/// Nodes and weights for `∫ e^{−t²} f(t) dt`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Roots of the degree-`n` Hermite polynomial by Newton iteration on the
    /// orthonormal recurrence, seeded with the usual asymptotic guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one quadrature node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    pub fn shared() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(mean + sd·Z)]` for `Z ~ N(0, 1)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mean: f64, sd: f64, mut f: F) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let total: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mean + scale * t))
            .sum();
        total / PI.sqrt()
    }

    /// Like [`GaussHermite::expect`] but short-circuits on the first error.
    pub fn try_expect<F, E>(&self, mean: f64, sd: f64, mut f: F) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        let scale = std::f64::consts::SQRT_2 * sd;
        let mut total = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            total += w * f(mean + scale * t)?;
        }
        Ok(total / PI.sqrt())
    }
}
