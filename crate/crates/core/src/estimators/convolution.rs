//! Values from general initial data and the admissibility check on that data.

use crate::brownian::{Grid, SampledPath};
use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// `t^{-1/3} log int exp(t^{1/3} (path(y) + f(y))) dy` by the trapezoid rule,
/// computed in log space. `f` may be `-inf`; intervals with a `-inf`
/// endpoint contribute nothing.
pub fn general_data_value(path: &SampledPath, f: &SampledPath, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain("t must be positive");
    }
    if path.grid != f.grid {
        return domain("path and initial data live on different grids");
    }
    let x = path.grid.points();
    let t13 = t.cbrt();
    let a: Vec<f64> = path.values.iter().zip(&f.values).map(|(p, q)| t13 * (p + q)).collect();
    let usable = |i: usize| a[i].is_finite() && a[i + 1].is_finite();
    let max = (0..x.len() - 1)
        .filter(|&i| usable(i))
        .map(|i| a[i].max(a[i + 1]))
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return domain("initial data is -inf on every grid interval");
    }
    let sum: f64 = (0..x.len() - 1)
        .filter(|&i| usable(i))
        .map(|i| 0.5 * (x[i + 1] - x[i]) * ((a[i] - max).exp() + (a[i + 1] - max).exp()))
        .sum();
    Ok((max + sum.ln()) / t13)
}

/// Admissibility class: `f(x) <= x^2 - L|x| + K` everywhere, and `f >= -K`
/// on a subset of `[-M, M]` of measure at least `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypParams {
    pub k: f64,
    pub l: f64,
    /// May be infinite.
    pub m: f64,
    /// May be zero.
    pub delta: f64,
}

impl HypParams {
    pub fn new(k: f64, l: f64, m: f64, delta: f64) -> Result<Self> {
        if !(k > 0.0 && l >= 0.0 && m > 0.0 && delta >= 0.0) || k.is_infinite() || l.is_infinite() {
            return domain("need K > 0, L >= 0, M > 0 and delta >= 0");
        }
        Ok(Self { k, l, m, delta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypReport {
    pub pass: bool,
    /// First grid point where the growth bound fails, with the value there.
    pub growth_violation: Option<(f64, f64)>,
    /// Measure of `{x in [-M, M] : f(x) >= -K}` on the grid.
    pub mass: f64,
    pub mass_ok: bool,
}

pub fn hyp_check(f: &SampledPath, params: &HypParams) -> HypReport {
    let x = f.grid.points();
    let growth_violation = x
        .iter()
        .zip(&f.values)
        .find(|&(&x, &v)| v > x * x - params.l * x.abs() + params.k)
        .map(|(&x, &v)| (x, v));
    let mass = superlevel_measure(&f.grid, &f.values, -params.k, params.m);
    let mass_ok = mass >= params.delta - 1e-9 * params.delta.max(1.0);
    HypReport { pass: growth_violation.is_none() && mass_ok, growth_violation, mass, mass_ok }
}

/// Trapezoid integral of `1{f >= level}` over grid intervals inside `[-m, m]`.
fn superlevel_measure(grid: &Grid, values: &[f64], level: f64, m: f64) -> f64 {
    let x = grid.points();
    let ind = |i: usize| if values[i] >= level { 1.0 } else { 0.0 };
    (0..x.len() - 1)
        .filter(|&i| x[i] >= -m && x[i + 1] <= m)
        .map(|i| 0.5 * (x[i + 1] - x[i]) * (ind(i) + ind(i + 1)))
        .sum()
}
