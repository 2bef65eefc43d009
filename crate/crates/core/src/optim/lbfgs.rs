//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub max_iterations: usize,
    /// Stop once the gradient max-norm falls to this level.
    pub gradient_tolerance: f64,
    pub memory_pairs: usize,
    /// Number of starting points tried by `fit_glm` (the first is always the
    /// zero vector); the best final objective wins.
    pub starts: usize,
    pub start_seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            memory_pairs: 10,
            starts: 1,
            start_seed: 0,
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(contract("max_iterations must be positive"));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(contract("gradient_tolerance must be positive"));
        }
        if self.memory_pairs == 0 {
            return Err(contract("memory_pairs must be positive"));
        }
        if self.starts == 0 {
            return Err(contract("starts must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta_hat: Vec<f64>,
    /// Objective at the start point followed by one entry per accepted step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
}

impl FitReport {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the start point")
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Point {
    step: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dg: f64,
}

struct Evaluator<'a, F> {
    objective: &'a mut F,
    x0: &'a [f64],
    dir: &'a [f64],
}

impl<F> Evaluator<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn at(&mut self, step: f64) -> Result<Point> {
        let x: Vec<f64> = self.x0.iter().zip(self.dir).map(|(a, d)| a + step * d).collect();
        let (f, g) = (self.objective)(&x)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { beta: x });
        }
        let dg = dot(&g, self.dir);
        Ok(Point { step, x, f, g, dg })
    }
}

/// Strong-Wolfe search along `dir`. Returns `None` when no acceptable point is
/// found; the returned point always satisfies sufficient decrease.
fn line_search<F>(
    ev: &mut Evaluator<'_, F>,
    f0: f64,
    dg0: f64,
    initial: f64,
) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let armijo = |p: &Point| p.f <= f0 + C1 * p.step * dg0;
    let curvature = |p: &Point| p.dg.abs() <= -C2 * dg0;

    let mut prev: Option<Point> = None;
    let mut step = initial;
    let mut hi: Point;
    let mut lo: Option<Point>;
    let mut k = 0;
    loop {
        let p = ev.at(step)?;
        let prev_f = prev.as_ref().map_or(f0, |q| q.f);
        if !armijo(&p) || (k > 0 && p.f >= prev_f) {
            lo = prev;
            hi = p;
            break;
        }
        if curvature(&p) {
            return Ok(Some(p));
        }
        if p.dg >= 0.0 {
            hi = prev.unwrap_or(Point { step: 0.0, x: ev.x0.to_vec(), f: f0, g: vec![], dg: dg0 });
            lo = Some(p);
            break;
        }
        k += 1;
        if k >= MAX_LINE_SEARCH {
            return Ok(Some(p));
        }
        prev = Some(p);
        step *= 2.0;
    }

    // zoom between lo (Armijo-satisfying, or the origin) and hi
    let (mut lo_step, mut lo_f, mut lo_dg) = match &lo {
        Some(p) => (p.step, p.f, p.dg),
        None => (0.0, f0, dg0),
    };
    for _ in 0..MAX_LINE_SEARCH {
        let width = hi.step - lo_step;
        // quadratic model through (lo_f, lo_dg) and hi.f, safeguarded
        let denom = 2.0 * (hi.f - lo_f - lo_dg * width);
        let mut trial = if denom > 0.0 {
            lo_step - lo_dg * width * width / denom
        } else {
            lo_step + 0.5 * width
        };
        let (a, b) = if lo_step < hi.step { (lo_step, hi.step) } else { (hi.step, lo_step) };
        let margin = 0.1 * (b - a);
        if !(trial > a + margin && trial < b - margin) {
            trial = 0.5 * (a + b);
        }
        if (b - a).abs() <= 1e-16 * b.abs().max(1.0) {
            break;
        }
        let p = ev.at(trial)?;
        if !armijo(&p) || p.f >= lo_f {
            hi = p;
        } else {
            if curvature(&p) {
                return Ok(Some(p));
            }
            if p.dg * (hi.step - lo_step) >= 0.0 {
                hi = match lo.take() {
                    Some(old) => old,
                    None => Point { step: 0.0, x: ev.x0.to_vec(), f: f0, g: vec![], dg: dg0 },
                };
            }
            lo_step = p.step;
            lo_f = p.f;
            lo_dg = p.dg;
            lo = Some(p);
        }
    }
    Ok(lo.filter(|p| p.f < f0))
}

/// Minimize a smooth function given as `β ↦ (value, gradient)`.
pub fn minimize<F>(objective: F, beta0: &[f64], config: &BatchConfig) -> Result<FitReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    minimize_observed(objective, beta0, config, |_, _, _| {})
}

/// [`minimize`] with a callback invoked at the start point and after every
/// accepted step as `(iteration, β, objective)`.
pub fn minimize_observed<F, O>(
    mut objective: F,
    beta0: &[f64],
    config: &BatchConfig,
    mut observe: O,
) -> Result<FitReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(usize, &[f64], f64),
{
    config.validate()?;
    let mut x = beta0.to_vec();
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { beta: x });
    }
    if g.len() != x.len() {
        return Err(contract("gradient length differs from parameter length"));
    }
    observe(0, &x, f);
    let mut trace = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = max_norm(&g) <= config.gradient_tolerance;
    let mut iterations = 0;

    while !converged && iterations < config.max_iterations {
        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir = q;
        let mut dg0 = dot(&g, &dir);
        if !(dg0 < 0.0) {
            // not a descent direction: restart from steepest descent
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            dg0 = dot(&g, &dir);
        }
        let initial = if pairs.is_empty() {
            (1.0 / dir.iter().map(|v| v * v).sum::<f64>().sqrt()).min(1.0)
        } else {
            1.0
        };

        let found = {
            let mut ev = Evaluator { objective: &mut objective, x0: &x, dir: &dir };
            line_search(&mut ev, f, dg0, initial)?
        };
        let Some(p) = found else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };

        let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == config.memory_pairs {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let stalled = f - p.f <= 1e-15 * f.abs().max(1.0);
        x = p.x;
        f = p.f;
        g = p.g;
        iterations += 1;
        trace.push(f);
        observe(iterations, &x, f);
        converged = max_norm(&g) <= config.gradient_tolerance;
        if stalled && !converged && pairs.is_empty() {
            break;
        }
    }

    Ok(FitReport {
        gradient_max_norm: max_norm(&g),
        beta_hat: x,
        objective_trace: trace,
        converged,
        iterations,
    })
}
