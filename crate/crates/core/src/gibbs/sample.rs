//! Non-intersecting bridge ensembles by rejection or by the chain.

use super::{default_burn_in, Chain, ChainConfig, EnsembleState, Hamiltonian};
use crate::brownian::{Grid, SampledPath};
use crate::error::{domain, Error, Result};
use crate::rng::{RngHandle, SimRng};
use rand_distr::{Distribution, StandardNormal};

/// Rejection gives up after this many attempts without a success.
const MAX_ATTEMPTS: u64 = 2_000_000;
/// Acceptance below this is reported as too low for rejection.
const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleMethod {
    Rejection,
    /// Resampling chain run for `sweeps` sweeps (default burn-in when `None`).
    Chain { sweeps: Option<usize> },
}

/// Reusable exact sampler: all curves are drawn together left to right and
/// the attempt is abandoned at the first ordering violation.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    grid: Grid,
    left: Vec<f64>,
    right: Vec<f64>,
    lower: Option<Vec<f64>>,
    rate: f64,
}

impl RejectionSampler {
    pub fn new(w: &[f64], z: &[f64], grid: &Grid, lower: Option<&SampledPath>, rate: f64) -> Result<Self> {
        validate_endpoints(w, z, grid, lower)?;
        if !(rate > 0.0) {
            return domain("rate must be positive");
        }
        Ok(Self {
            grid: grid.clone(),
            left: w.to_vec(),
            right: z.to_vec(),
            lower: lower.map(|l| l.values.clone()),
            rate,
        })
    }

    /// One attempt; returns whether `out` now holds an ordered ensemble.
    pub fn attempt(&self, rng: &mut SimRng, out: &mut [Vec<f64>]) -> bool {
        let x = self.grid.points();
        let n = x.len();
        let b = x[n - 1];
        let k = self.left.len();
        for i in 0..k {
            out[i][0] = self.left[i];
        }
        for j in 1..n {
            let dx = x[j] - x[j - 1];
            let rest = b - x[j - 1];
            let sd = (self.rate * dx * (b - x[j]) / rest).sqrt();
            for i in 0..k {
                out[i][j] = if j == n - 1 {
                    self.right[i]
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    out[i][j - 1] + dx / rest * (self.right[i] - out[i][j - 1]) + sd * z
                };
                if i > 0 && out[i][j] >= out[i - 1][j] {
                    return false;
                }
            }
            if let Some(l) = &self.lower {
                if out[k - 1][j] <= l[j] {
                    return false;
                }
            }
        }
        true
    }

    /// Draws until success; returns the number of attempts used.
    pub fn draw(&self, rng: &mut SimRng, out: &mut [Vec<f64>]) -> Result<u64> {
        for attempts in 1..=MAX_ATTEMPTS {
            if self.attempt(rng, out) {
                return Ok(attempts);
            }
        }
        Err(Error::LowAcceptance {
            acceptance: 0.0,
            guidance: format!(
                "no success in {MAX_ATTEMPTS} attempts (acceptance below {MIN_ACCEPTANCE:.0e}); \
                 use the chain method"
            ),
        })
    }

    pub fn draw_state(&self, rng: &mut SimRng) -> Result<EnsembleState> {
        let mut curves = vec![vec![0.0; self.grid.len()]; self.left.len()];
        self.draw(rng, &mut curves)?;
        let lower = self.lower.clone().map(|v| SampledPath { grid: self.grid.clone(), values: v });
        EnsembleState::new(self.grid.clone(), curves, lower, None)
    }
}

fn validate_endpoints(w: &[f64], z: &[f64], grid: &Grid, lower: Option<&SampledPath>) -> Result<()> {
    if w.is_empty() || w.len() != z.len() {
        return domain("need matching nonempty entrance and exit vectors");
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|p| p[0] > p[1]);
    if !decreasing(w) || !decreasing(z) {
        return domain("entrance and exit values must be strictly decreasing");
    }
    if let Some(l) = lower {
        if l.grid != *grid {
            return domain("lower boundary lives on a different grid");
        }
        let k = w.len();
        if !(l.values[0] < w[k - 1] && l.values[l.values.len() - 1] < z[k - 1]) {
            return domain("lower boundary must start and end below the bottom curve");
        }
    }
    Ok(())
}

/// An ordered starting state: linear interpolants, lifted where needed to
/// clear the lower boundary with room for every curve.
pub fn initial_ordered_state(w: &[f64], z: &[f64], grid: &Grid, lower: Option<&SampledPath>) -> Result<EnsembleState> {
    validate_endpoints(w, z, grid, lower)?;
    let k = w.len();
    let (a, b) = (grid.left(), grid.right());
    let mut curves: Vec<Vec<f64>> = (0..k)
        .map(|i| grid.points().iter().map(|&x| w[i] + (x - a) / (b - a) * (z[i] - w[i])).collect())
        .collect();
    if let Some(l) = lower {
        let (fl, fr) = (l.values[0], l.values[l.values.len() - 1]);
        let gap = (0..k)
            .map(|i| (w[i] - fl).min(z[i] - fr) / (2.0 * (k - i) as f64))
            .fold(f64::INFINITY, f64::min);
        for (i, c) in curves.iter_mut().enumerate() {
            let lift = (k - i) as f64 * gap;
            for (v, f) in c.iter_mut().zip(&l.values) {
                *v = v.max(f + lift);
            }
        }
    }
    EnsembleState::new(grid.clone(), curves, lower.cloned(), None)
}

/// `k` non-intersecting rate-`rate` bridges from `w` to `z` above `lower`.
#[allow(clippy::too_many_arguments)]
pub fn sample_nonintersecting(
    w: &[f64],
    z: &[f64],
    grid: &Grid,
    lower: Option<&SampledPath>,
    rate: f64,
    rng: &RngHandle,
    method: SampleMethod,
) -> Result<EnsembleState> {
    match method {
        SampleMethod::Rejection => RejectionSampler::new(w, z, grid, lower, rate)?.draw_state(&mut rng.rng()),
        SampleMethod::Chain { sweeps } => {
            let init = initial_ordered_state(w, z, grid, lower)?;
            let bound = init.curves().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut cfg = ChainConfig::new(1e3 * (1.0 + bound))?;
            cfg.rate = rate;
            let sweeps = sweeps.unwrap_or_else(|| default_burn_in(w.len(), grid.len()));
            let mut chain = Chain::new(init, Hamiltonian::Zero, cfg, rng)?;
            chain.run(sweeps)?;
            Ok(chain.into_state())
        }
    }
}
