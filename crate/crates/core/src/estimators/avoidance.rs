//! Probability that a bridge stays above a barrier, and its analytic bounds.

use super::{AvoidanceSpec, Barrier};
use crate::brownian::{ln_gaussian_tail_sandwich, BridgeSampler, BridgeSpec, Grid};
use crate::error::{domain, Result};
use crate::estimate::{Method, TailEstimate};
use crate::rng::{RngHandle, SimRng};
use crate::stats::{ln_norm_sf, Moments};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Interval length below which the closed-form lower bound is flagged.
pub const CLOSED_FORM_MIN_LENGTH: f64 = 5.0;

/// Settings of the resampling particle estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleConfig {
    /// Particles per independent replicate.
    pub particles: usize,
    /// Fraction in `[0, 1]` of the way the proposal mean is moved from the
    /// chord towards the barrier-following guide.
    pub tilt: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { particles: 2048, tilt: 1.0 }
    }
}

/// Fraction of sampled bridges staying strictly above the barrier at every
/// grid point. `Naive` counts plain samples; `Tilted` runs the resampling
/// particle estimator with a barrier-following proposal mean.
pub fn mc_avoidance(
    spec: &AvoidanceSpec,
    grid_step: f64,
    n: u64,
    rng: &RngHandle,
    method: Method,
) -> Result<TailEstimate> {
    if n == 0 {
        return domain("need at least one sample");
    }
    let grid = Grid::uniform(spec.z1, spec.z2, grid_step)?;
    let barrier: Vec<f64> = grid.points().iter().map(|&x| spec.barrier.eval(x)).collect();
    let bridge = BridgeSpec::rate_two(spec.z1, spec.z2, spec.left_height, spec.right_height)?;
    match method {
        Method::Naive => {
            let sampler = BridgeSampler::new(bridge, &grid)?;
            Ok(sampler.event_fraction(n, rng, |v| v.iter().zip(&barrier).all(|(y, b)| y > b)))
        }
        Method::Tilted => {
            let chord = chord_values(&grid, spec.left_height, spec.right_height);
            let guide = barrier_guide(&grid, spec);
            particle_avoidance(&grid, 2.0, &chord, &guide, &barrier, ParticleConfig::default(), n, rng)
        }
        Method::Chain => domain("avoidance has no chain estimator"),
    }
}

pub(crate) fn chord_values(grid: &Grid, left: f64, right: f64) -> Vec<f64> {
    let (a, b) = (grid.left(), grid.right());
    grid.points().iter().map(|&x| left + (x - a) / (b - a) * (right - left)).collect()
}

/// The barrier plus the linear interpolation of the endpoint excesses.
fn barrier_guide(grid: &Grid, spec: &AvoidanceSpec) -> Vec<f64> {
    let el = spec.left_height - spec.barrier.eval(spec.z1);
    let er = spec.right_height - spec.barrier.eval(spec.z2);
    grid.points()
        .iter()
        .map(|&x| spec.barrier.eval(x) + el + (x - spec.z1) / (spec.z2 - spec.z1) * (er - el))
        .collect()
}

/// Resampling particle estimate of `P(bridge > barrier at every interior
/// grid point)` for the bridge with mean `chord` (its endpoint values fix
/// the bridge). Particles move as the bridge shifted to mean
/// `chord + tilt * max(0, guide - chord)`, are reweighted by the exact
/// likelihood ratio and killed below the barrier. `n` particles in total
/// are split into independent replicates whose normalizing-constant
/// estimates are averaged.
#[allow(clippy::too_many_arguments)]
pub fn particle_avoidance(
    grid: &Grid,
    rate: f64,
    chord: &[f64],
    guide: &[f64],
    barrier: &[f64],
    cfg: ParticleConfig,
    n: u64,
    rng: &RngHandle,
) -> Result<TailEstimate> {
    let len = grid.len();
    if chord.len() != len || guide.len() != len || barrier.len() != len {
        return domain("paths must match the grid");
    }
    if len < 3 {
        return domain("grid needs an interior point");
    }
    if !(0.0..=1.0).contains(&cfg.tilt) || cfg.particles < 2 {
        return domain("tilt must lie in [0, 1] and at least two particles are needed");
    }
    if n == 0 {
        return domain("need at least one sample");
    }
    let proposal: Vec<f64> =
        chord.iter().zip(guide).map(|(c, g)| c + cfg.tilt * (g - c).max(0.0)).collect();
    let plan = ParticlePlan::new(grid, rate, chord, &proposal, barrier);
    let particles = cfg.particles.min(n as usize).max(2);
    let replicates = n.div_ceil(particles as u64);
    let runs: Vec<(f64, u64)> = (0..replicates)
        .into_par_iter()
        .map(|r| plan.replicate(particles, &mut rng.substream(r).rng()))
        .collect();
    let reference = runs.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let mut moments = Moments::default();
    let mut hits = 0;
    for &(log_z, alive) in &runs {
        moments.push(if reference.is_finite() { (log_z - reference).exp() } else { 0.0 });
        hits += alive;
    }
    let mut est = TailEstimate::from_weights(&moments, hits, Method::Tilted);
    if est.log_p.is_finite() {
        est.log_p += reference;
        est.upper_log += reference;
    }
    est.n = replicates * particles as u64;
    Ok(est)
}

struct ParticlePlan {
    carry: Vec<f64>,
    sd: Vec<f64>,
    /// Likelihood-ratio slope per interval.
    slope: Vec<f64>,
    energy: f64,
    /// Noise level below which a particle is killed.
    floor: Vec<f64>,
}

impl ParticlePlan {
    fn new(grid: &Grid, rate: f64, chord: &[f64], proposal: &[f64], barrier: &[f64]) -> Self {
        let x = grid.points();
        let n = x.len();
        let b = x[n - 1];
        let mut plan = Self {
            carry: vec![0.0; n],
            sd: vec![0.0; n],
            slope: vec![0.0; n],
            energy: 0.0,
            floor: vec![0.0; n],
        };
        for i in 1..n {
            let dx = x[i] - x[i - 1];
            let rest = b - x[i - 1];
            plan.carry[i] = 1.0 - dx / rest;
            plan.sd[i] = (rate * dx * (b - x[i]) / rest).sqrt();
            let dd = (proposal[i] - chord[i]) - (proposal[i - 1] - chord[i - 1]);
            plan.slope[i] = dd / (rate * dx);
            plan.energy += dd * dd / (2.0 * rate * dx);
            plan.floor[i] = barrier[i] - proposal[i];
        }
        plan
    }

    /// One replicate: `(log of the normalizing-constant estimate, particles
    /// alive at the end)`.
    fn replicate(&self, p: usize, rng: &mut SimRng) -> (f64, u64) {
        let n = self.carry.len();
        let mut w = vec![0.0f64; p];
        let mut next = vec![0.0f64; p];
        let mut logw = vec![0.0f64; p];
        let mut cum = vec![0.0f64; p];
        let mut log_z = -self.energy;
        for i in 1..n - 1 {
            let (carry, sd, slope, floor) = (self.carry[i], self.sd[i], self.slope[i], self.floor[i]);
            let last = i == n - 2;
            for k in 0..p {
                if logw[k] == f64::NEG_INFINITY {
                    continue;
                }
                let z: f64 = StandardNormal.sample(rng);
                let v = carry * w[k] + sd * z;
                if v <= floor {
                    logw[k] = f64::NEG_INFINITY;
                    continue;
                }
                let mut inc = -slope * (v - w[k]);
                if last {
                    inc += self.slope[n - 1] * v;
                }
                logw[k] += inc;
                w[k] = v;
            }
            let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return (f64::NEG_INFINITY, 0);
            }
            let (mut s, mut s2) = (0.0, 0.0);
            for (k, &l) in logw.iter().enumerate() {
                let e = (l - max).exp();
                s += e;
                s2 += e * e;
                cum[k] = s;
            }
            if last {
                let alive = logw.iter().filter(|l| l.is_finite()).count() as u64;
                return (log_z + max + (s / p as f64).ln(), alive);
            }
            if s * s < 0.5 * p as f64 * s2 {
                log_z += max + (s / p as f64).ln();
                let u0: f64 = rng.random();
                let mut j = 0;
                for k in 0..p {
                    let target = (k as f64 + u0) / p as f64 * s;
                    while j + 1 < p && cum[j] <= target {
                        j += 1;
                    }
                    next[k] = w[j];
                }
                std::mem::swap(&mut w, &mut next);
                logw.iter_mut().for_each(|l| *l = 0.0);
            }
        }
        unreachable!("loop returns at the last interior point")
    }
}

/// Which lower bound on the avoidance probability to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LowerBoundVariant {
    /// `-L^3/12 - 2 L ln L` for interval length `L`.
    ClosedForm,
    /// Constructive mesh bound with spacing close to `epsilon`.
    Mesh { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticBound {
    pub log_p: f64,
    /// Set when the bound is evaluated outside the range where it is proved.
    pub flagged: bool,
    /// Mesh spacing actually used (the interval length over an integer).
    pub epsilon: Option<f64>,
}

/// Lower bound on the log probability that a rate-two bridge on `[z1, z2]`
/// with endpoints one unit above `-x^2` stays above `-x^2`.
pub fn analytic_avoidance_lower_bound(z1: f64, z2: f64, variant: LowerBoundVariant) -> Result<AnalyticBound> {
    let l = z2 - z1;
    if !(l > 0.0) {
        return domain("need z1 < z2");
    }
    match variant {
        LowerBoundVariant::ClosedForm => Ok(AnalyticBound {
            log_p: -l.powi(3) / 12.0 - 2.0 * l * l.ln(),
            flagged: l < CLOSED_FORM_MIN_LENGTH,
            epsilon: None,
        }),
        LowerBoundVariant::Mesh { epsilon } => {
            if !(epsilon > 0.0) {
                return domain("mesh spacing must be positive");
            }
            let count = (l / epsilon).round().max(1.0);
            let eps = l / count;
            let (lo, hi) = ((4.0f64 / 3.0).cbrt(), 2f64.sqrt());
            if !(lo <= eps && eps < hi) {
                return domain(format!(
                    "mesh spacing {eps} (length {l} over {count} cells) outside [{lo:.4}, {hi:.4})"
                ));
            }
            // Each cell's bridge fluctuation stays above -1/2.
            let p = 1.0 - (-1.0 / (4.0 * eps)).exp();
            let mut log_p = count * p.ln();
            for j in 1..count as usize {
                let jf = j as f64;
                let lambda = eps / (l - eps * (jf - 1.0));
                let x = eps * (l - eps * jf);
                let sigma = (2.0 * eps * (1.0 - lambda)).sqrt();
                log_p += ln_gaussian_tail_sandwich(x, sigma)?.0;
            }
            Ok(AnalyticBound { log_p, flagged: false, epsilon: Some(eps) })
        }
    }
}

/// Upper bound on the log avoidance probability on `[-z, z]` with endpoints
/// one unit above `-x^2`: the log of `P(N(0, 4z^3/3) > 4z^3/3 - 2z)`.
pub fn analytic_avoidance_upper_bound(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain("z must be positive");
    }
    let var = 4.0 * z.powi(3) / 3.0;
    let x = var - 2.0 * z;
    let sigma = var.sqrt();
    match ln_gaussian_tail_sandwich(x, sigma) {
        Ok((_, upper)) => Ok(upper),
        Err(_) => Ok(ln_norm_sf(x / sigma)),
    }
}

/// Gaussian exponent `-(4z^3/3 - 2z)^2 / (2 * 4z^3/3)` of the upper bound.
pub fn avoidance_upper_exponent(z: f64) -> f64 {
    let var = 4.0 * z.powi(3) / 3.0;
    let x = var - 2.0 * z;
    -x * x / (2.0 * var)
}

impl Barrier {
    /// A barrier so low it can never bind.
    pub fn far_below() -> Self {
        Barrier::ShiftedParabola(-1e6)
    }
}
