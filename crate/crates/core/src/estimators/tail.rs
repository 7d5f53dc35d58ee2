//! Conditional upper-tail probabilities of a bridge above `-x^2`.
//!
//! Each estimate is a ratio: the probability that the bridge clears given
//! levels at given points while staying above the barrier, over the
//! probability that it stays above the barrier.

use super::avoidance::{chord_values, particle_avoidance, ParticleConfig};
use super::grids::grid_through;
use crate::brownian::{fill_bridge, BridgeSampler, BridgeSpec, Grid};
use crate::error::{domain, Result};
use crate::estimate::{Method, TailEstimate};
use crate::geometry::{tangency_points, TwoPointSpec};
use crate::parallel::chunked_reduce;
use crate::rng::{RngHandle, SimRng};
use crate::stats::Moments;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Effective sample sizes below this trigger a warning.
const MIN_ESS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailConfig {
    pub grid_step: f64,
    /// Height of the bridge endpoints above the barrier.
    pub margin: f64,
    /// Tilt strength in `[0, 1]`; zero gives plain conditional sampling.
    pub tilt: f64,
    /// Particles per replicate of the avoidance denominator.
    pub particles: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self { grid_step: 0.01, margin: 1.0, tilt: 1.0, particles: 2048 }
    }
}

impl TailConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.margin > 0.0) {
            return domain("grid step and margin must be positive");
        }
        if !(0.0..=1.0).contains(&self.tilt) {
            return domain("tilt must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// Log of numerator over denominator.
    pub estimate: TailEstimate,
    pub numerator: TailEstimate,
    pub denominator: TailEstimate,
    /// Effective sample size of the numerator weights.
    pub ess: f64,
    pub warnings: Vec<String>,
}

/// Pinned levels on a bridge above a barrier, sampled with the pin values
/// shifted towards their levels and each gap between anchors shifted
/// towards `guide`.
struct PinnedTilt {
    grid: Grid,
    rate: f64,
    left: f64,
    right: f64,
    /// `(grid index, level)` in increasing index order.
    pins: Vec<(usize, f64)>,
    barrier: Vec<f64>,
    guide: Vec<f64>,
    tilt: f64,
}

impl PinnedTilt {
    /// Log importance weight of one draw into `buf`, `-inf` off the event.
    /// With `rng = None` all noise is zero, giving a typical log weight.
    fn draw(&self, mut rng: Option<&mut SimRng>, buf: &mut [f64], noise: &mut [f64]) -> f64 {
        let x = self.grid.points();
        let n = x.len();
        let (xr, yr) = (x[n - 1], self.right);
        let normal = |r: &mut Option<&mut SimRng>| -> f64 {
            match r {
                Some(g) => StandardNormal.sample(*g),
                None => 0.0,
            }
        };
        let mut log_w = 0.0;
        buf[0] = self.left;
        buf[n - 1] = yr;
        let mut prev = 0usize;
        for &(j, level) in &self.pins {
            let (xp, yp) = (x[prev], buf[prev]);
            let mean = yp + (x[j] - xp) / (xr - xp) * (yr - yp);
            let var = self.rate * (x[j] - xp) * (xr - x[j]) / (xr - xp);
            let shift = self.tilt * (level - mean).max(0.0);
            let y = mean + shift + var.sqrt() * normal(&mut rng);
            if y < level {
                return f64::NEG_INFINITY;
            }
            log_w -= shift * (2.0 * (y - mean) - shift) / (2.0 * var);
            buf[j] = y;
            prev = j;
        }
        let mut anchors: Vec<usize> = Vec::with_capacity(self.pins.len() + 2);
        anchors.push(0);
        anchors.extend(self.pins.iter().map(|p| p.0));
        anchors.push(n - 1);
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a + 1 {
                continue;
            }
            let seg = &mut noise[a..=b];
            seg[0] = 0.0;
            seg[b - a] = 0.0;
            if let Some(g) = rng.as_deref_mut() {
                fill_bridge(&x[a..=b], self.rate, g, seg);
            } else {
                seg.iter_mut().for_each(|v| *v = 0.0);
            }
            let (ya, yb) = (buf[a], buf[b]);
            let mut prev_d = 0.0;
            for i in a + 1..=b {
                let chord = ya + (x[i] - x[a]) / (x[b] - x[a]) * (yb - ya);
                let d = if i == b { 0.0 } else { self.tilt * (self.guide[i] - chord).max(0.0) };
                let dx = x[i] - x[i - 1];
                let dd = d - prev_d;
                let dw = noise[i] - noise[i - 1];
                log_w -= (2.0 * dw * dd + dd * dd) / (2.0 * self.rate * dx);
                prev_d = d;
                if i < b {
                    let y = chord + d + noise[i];
                    if y <= self.barrier[i] {
                        return f64::NEG_INFINITY;
                    }
                    buf[i] = y;
                }
            }
        }
        log_w
    }

    fn estimate(&self, n: u64, rng: &RngHandle) -> (TailEstimate, f64) {
        let len = self.grid.len();
        let mut buf = vec![0.0; len];
        let mut noise = vec![0.0; len];
        let reference = self.draw(None, &mut buf, &mut noise);
        let reference = if reference.is_finite() { reference } else { 0.0 };
        let (m, hits) = chunked_reduce(
            n,
            rng,
            |h, count| {
                let mut r = h.rng();
                let mut buf = vec![0.0; len];
                let mut noise = vec![0.0; len];
                let mut m = Moments::default();
                let mut hits = 0u64;
                for _ in 0..count {
                    let lw = self.draw(Some(&mut r), &mut buf, &mut noise);
                    if lw > f64::NEG_INFINITY {
                        hits += 1;
                    }
                    m.push((lw - reference).exp());
                }
                (m, hits)
            },
            |(a, ha), (b, hb)| (a.merge(b), ha + hb),
        );
        let ess = if m.sum_sq > 0.0 { m.sum * m.sum / m.sum_sq } else { 0.0 };
        let mut est = TailEstimate::from_weights(&m, hits, Method::Tilted);
        if est.log_p.is_finite() {
            est.log_p += reference;
            est.upper_log += reference;
        }
        (est, ess)
    }
}

/// Bridge on `[x_lo, x_hi]` with endpoints `margin` above `-x^2`, required
/// to clear `levels` at the `(x, level)` points.
struct TailProblem {
    grid: Grid,
    margin: f64,
    pins: Vec<(usize, f64)>,
}

impl TailProblem {
    fn new(x_lo: f64, x_hi: f64, levels: &[(f64, f64)], cfg: &TailConfig) -> Result<Self> {
        cfg.validate()?;
        let mut breaks = vec![x_lo];
        breaks.extend(levels.iter().map(|l| l.0));
        breaks.push(x_hi);
        let grid = grid_through(&breaks, cfg.grid_step)?;
        let pins = levels
            .iter()
            .map(|&(x, level)| (grid.index_of(x).expect("breakpoint on grid"), level))
            .collect();
        Ok(Self { grid, margin: cfg.margin, pins })
    }

    fn ends(&self) -> (f64, f64) {
        let (a, b) = (self.grid.left(), self.grid.right());
        (-a * a + self.margin, -b * b + self.margin)
    }

    fn barrier(&self) -> Vec<f64> {
        self.grid.points().iter().map(|x| -x * x).collect()
    }

    fn tilted(&self, n: u64, rng: &RngHandle, cfg: &TailConfig) -> Result<TailReport> {
        if n == 0 {
            return domain("need at least one sample");
        }
        let (left, right) = self.ends();
        let barrier = self.barrier();
        let guide: Vec<f64> = barrier.iter().map(|b| b + self.margin).collect();
        let numerator = PinnedTilt {
            grid: self.grid.clone(),
            rate: 2.0,
            left,
            right,
            pins: self.pins.clone(),
            barrier: barrier.clone(),
            guide: guide.clone(),
            tilt: cfg.tilt,
        };
        let (num, ess) = numerator.estimate(n, &rng.substream(0));
        let chord = chord_values(&self.grid, left, right);
        let pcfg = ParticleConfig { particles: cfg.particles, tilt: cfg.tilt };
        let den = particle_avoidance(&self.grid, 2.0, &chord, &guide, &barrier, pcfg, n, &rng.substream(1))?;
        let mut warnings = Vec::new();
        if ess < MIN_ESS {
            warnings.push(format!("numerator effective sample size {ess:.1} below {MIN_ESS}"));
        }
        Ok(TailReport { estimate: ratio(&num, &den, n), numerator: num, denominator: den, ess, warnings })
    }

    fn naive(&self, n: u64, rng: &RngHandle) -> Result<TailReport> {
        if n == 0 {
            return domain("need at least one sample");
        }
        let (left, right) = self.ends();
        let spec = BridgeSpec::rate_two(self.grid.left(), self.grid.right(), left, right)?;
        let sampler = BridgeSampler::new(spec, &self.grid)?;
        let barrier = self.barrier();
        let len = self.grid.len();
        let (num, den) = chunked_reduce(
            n,
            rng,
            |h, count| {
                let mut r = h.rng();
                let mut buf = vec![0.0; len];
                let (mut num, mut den) = (0u64, 0u64);
                for _ in 0..count {
                    sampler.sample_into(&mut r, &mut buf);
                    if buf[1..len - 1].iter().zip(&barrier[1..len - 1]).all(|(y, b)| y > b) {
                        den += 1;
                        if self.pins.iter().all(|&(j, level)| buf[j] >= level) {
                            num += 1;
                        }
                    }
                }
                (num, den)
            },
            |(a, b), (c, d)| (a + c, b + d),
        );
        if den == 0 {
            return domain("no sample avoided the barrier; use the tilted estimator");
        }
        let mut estimate = TailEstimate::from_counts(num, den, Method::Naive);
        estimate.n = n;
        Ok(TailReport {
            estimate,
            numerator: TailEstimate::from_counts(num, n, Method::Naive),
            denominator: TailEstimate::from_counts(den, n, Method::Naive),
            ess: num as f64,
            warnings: Vec::new(),
        })
    }
}

fn ratio(num: &TailEstimate, den: &TailEstimate, n: u64) -> TailEstimate {
    let log_p = num.log_p - den.log_p;
    let stderr_log = num.stderr_log.hypot(den.stderr_log);
    if !log_p.is_finite() {
        return TailEstimate {
            log_p: f64::NEG_INFINITY,
            stderr_log: f64::INFINITY,
            n,
            method: Method::Tilted,
            hits: num.hits.min(den.hits),
            upper_log: num.upper_log - den.log_p,
        };
    }
    TailEstimate {
        log_p,
        stderr_log,
        n,
        method: Method::Tilted,
        hits: num.hits.min(den.hits),
        upper_log: log_p + 1.645 * stderr_log,
    }
}

fn one_point_problem(theta: f64, cfg: &TailConfig) -> Result<TailProblem> {
    if !(theta > 0.0) {
        return domain(format!("theta = {theta} must be positive"));
    }
    let r = theta.sqrt();
    TailProblem::new(-r, r, &[(0.0, theta)], cfg)
}

/// `log P(B(0) >= theta | B > -x^2)` for the rate-two bridge on
/// `[-sqrt(theta), sqrt(theta)]` with endpoints `margin` above `-x^2`.
/// The midpoint is drawn from a Gaussian shifted to `theta`, the side
/// bridges conditionally; the denominator uses the particle estimator.
pub fn tilted_one_point_tail(theta: f64, n: u64, rng: &RngHandle, cfg: &TailConfig) -> Result<TailReport> {
    one_point_problem(theta, cfg)?.tilted(n, rng, cfg)
}

/// Plain Monte Carlo version of [`tilted_one_point_tail`].
pub fn naive_one_point_tail(theta: f64, n: u64, rng: &RngHandle, cfg: &TailConfig) -> Result<TailReport> {
    one_point_problem(theta, cfg)?.naive(n, rng)
}

fn two_point_problem(spec: &TwoPointSpec, mirrored: bool, cfg: &TailConfig) -> Result<TailProblem> {
    let (x_ell, x_r) = tangency_points(spec);
    let r = spec.theta.sqrt();
    let (at, bt) = (spec.a * spec.theta, spec.b * spec.theta);
    if mirrored {
        TailProblem::new(-x_r, -x_ell, &[(-r, bt), (r, at)], cfg)
    } else {
        TailProblem::new(x_ell, x_r, &[(-r, at), (r, bt)], cfg)
    }
}

/// `log P(B(-sqrt(theta)) >= a theta, B(sqrt(theta)) >= b theta | B > -x^2)`
/// for the bridge between the tangency points, endpoints `margin` above
/// `-x^2`.
pub fn mc_two_point(
    spec: &TwoPointSpec,
    n: u64,
    rng: &RngHandle,
    method: Method,
    cfg: &TailConfig,
) -> Result<TailReport> {
    let problem = two_point_problem(spec, false, cfg)?;
    match method {
        Method::Naive => problem.naive(n, rng),
        Method::Tilted => problem.tilted(n, rng, cfg),
        Method::Chain => domain("two-point tail has no chain estimator"),
    }
}

/// [`mc_two_point`] for the reflected picture: levels `b theta` at
/// `-sqrt(theta)` and `a theta` at `sqrt(theta)` on the reflected interval.
pub fn mc_two_point_mirrored(
    spec: &TwoPointSpec,
    n: u64,
    rng: &RngHandle,
    method: Method,
    cfg: &TailConfig,
) -> Result<TailReport> {
    let problem = two_point_problem(spec, true, cfg)?;
    match method {
        Method::Naive => problem.naive(n, rng),
        Method::Tilted => problem.tilted(n, rng, cfg),
        Method::Chain => domain("two-point tail has no chain estimator"),
    }
}
