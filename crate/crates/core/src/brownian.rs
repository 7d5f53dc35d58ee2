//! Brownian bridges on explicit grids: exact finite-dimensional sampling,
//! the bridge decomposition, and closed-form Gaussian/bridge estimates.
//!
//! Paths are carried as values on a strictly increasing grid and every
//! event (a supremum, avoidance of a barrier) is evaluated at grid points.

use crate::error::{domain, Result};
use crate::estimate::{Method, TailEstimate};
use crate::parallel::chunked_reduce;
use crate::rng::{RngHandle, SimRng};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;
use std::sync::Arc;

/// Strictly increasing abscissae shared by paths and ensembles.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Arc<[f64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points == other.points
    }
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return domain("grid needs at least two points");
        }
        if points.iter().any(|x| !x.is_finite()) {
            return domain("grid points must be finite");
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return domain("grid must be strictly increasing");
        }
        Ok(Self { points: points.into() })
    }

    /// Evenly spaced grid on `[left, right]`; the step is rounded so that
    /// both endpoints are grid points.
    pub fn uniform(left: f64, right: f64, step: f64) -> Result<Self> {
        if !(left < right) || !(step > 0.0) {
            return domain(format!("bad uniform grid [{left}, {right}] step {step}"));
        }
        let n = ((right - left) / step).round().max(1.0) as usize;
        let pts = (0..=n)
            .map(|i| if i == n { right } else { left + (right - left) * i as f64 / n as f64 })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left(&self) -> f64 {
        self.points[0]
    }

    pub fn right(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the grid point equal to `x` up to a relative tolerance.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let tol = 1e-9 * (self.right() - self.left()).max(x.abs()).max(1.0);
        let i = self.points.partition_point(|&p| p < x - tol);
        (i < self.len() && (self.points[i] - x).abs() <= tol).then_some(i)
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p < x);
        if i == 0 {
            0
        } else if i == self.len() {
            self.len() - 1
        } else if x - self.points[i - 1] <= self.points[i] - x {
            i - 1
        } else {
            i
        }
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let p = &self.points;
        let n = p.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
                let right = if i + 1 < n { p[i + 1] - p[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.points
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// The grid points with indices `from..=to`.
    pub fn sub(&self, from: usize, to: usize) -> Result<Grid> {
        if from >= to || to >= self.len() {
            return domain(format!("bad sub-grid {from}..={to}"));
        }
        Grid::new(self.points[from..=to].to_vec())
    }

    /// Mirror image `x -> left + right - x`.
    pub fn reflected(&self) -> Grid {
        let (l, r) = (self.left(), self.right());
        let pts: Vec<f64> = self.points.iter().rev().map(|x| l + r - x).collect();
        Grid { points: pts.into() }
    }
}

/// A curve known at the points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return domain(format!("{} grid points but {} values", grid.len(), values.len()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.grid.index_of(x).map(|i| self.values[i])
    }

    /// Affinely detrended restriction to `[left, right]`: zero at both ends.
    pub fn bridge_of(&self, left: f64, right: f64) -> Result<SampledPath> {
        let (i0, i1) = self.sub_indices(left, right)?;
        let grid = self.grid.sub(i0, i1)?;
        let (a, b) = (grid.left(), grid.right());
        let (fa, fb) = (self.values[i0], self.values[i1]);
        let values = grid
            .points()
            .iter()
            .zip(&self.values[i0..=i1])
            .map(|(&x, &f)| f - (b - x) / (b - a) * fa - (x - a) / (b - a) * fb)
            .collect();
        SampledPath::new(grid, values)
    }

    /// Inverse of [`bridge_of`](Self::bridge_of): adds back the chord through
    /// `(left, left_value)` and `(right, right_value)`.
    pub fn with_chord(&self, left_value: f64, right_value: f64) -> SampledPath {
        let (a, b) = (self.grid.left(), self.grid.right());
        let values = self
            .grid
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| v + (b - x) / (b - a) * left_value + (x - a) / (b - a) * right_value)
            .collect();
        SampledPath { grid: self.grid.clone(), values }
    }

    fn sub_indices(&self, left: f64, right: f64) -> Result<(usize, usize)> {
        match (self.grid.index_of(left), self.grid.index_of(right)) {
            (Some(i0), Some(i1)) if i0 < i1 => Ok((i0, i1)),
            _ => domain(format!("[{left}, {right}] endpoints are not grid points")),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Law of one Brownian bridge: interval, endpoint values, diffusion rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeSpec {
    pub left_x: f64,
    pub right_x: f64,
    pub left_y: f64,
    pub right_y: f64,
    /// Variance per unit time.
    pub rate: f64,
}

impl BridgeSpec {
    pub fn new(left_x: f64, right_x: f64, left_y: f64, right_y: f64, rate: f64) -> Result<Self> {
        if !(left_x < right_x) {
            return domain(format!("bridge interval [{left_x}, {right_x}] is empty"));
        }
        if !(rate > 0.0) || !left_y.is_finite() || !right_y.is_finite() {
            return domain("bridge needs finite endpoints and positive rate");
        }
        Ok(Self { left_x, right_x, left_y, right_y, rate })
    }

    /// Rate-two bridge, the convention used throughout the crate.
    pub fn rate_two(left_x: f64, right_x: f64, left_y: f64, right_y: f64) -> Result<Self> {
        Self::new(left_x, right_x, left_y, right_y, 2.0)
    }

    pub fn length(&self) -> f64 {
        self.right_x - self.left_x
    }

    fn check(&self, x: f64) -> Result<()> {
        if x < self.left_x || x > self.right_x || x.is_nan() {
            return domain(format!("x = {x} outside [{}, {}]", self.left_x, self.right_x));
        }
        Ok(())
    }

    /// Linear interpolation of the endpoint values.
    pub fn mean(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.mean_unchecked(x))
    }

    fn mean_unchecked(&self, x: f64) -> f64 {
        self.left_y + (x - self.left_x) / self.length() * (self.right_y - self.left_y)
    }

    /// `rate * (x - left)(right - x) / (right - left)`.
    pub fn variance(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.rate * (x - self.left_x) * (self.right_x - x) / self.length())
    }

    /// Same interval with the endpoint values exchanged (the law of the
    /// time-reversed path).
    pub fn reversed(&self) -> Self {
        Self { left_y: self.right_y, right_y: self.left_y, ..*self }
    }

    pub fn with_endpoints(&self, left_y: f64, right_y: f64) -> Self {
        Self { left_y, right_y, ..*self }
    }
}

/// Precomputed sequential-conditional coefficients for one spec on one grid.
///
/// Point `i` is drawn given point `i - 1` and the right endpoint, which is
/// the exact joint law of the bridge on the grid, uniform or not.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    spec: BridgeSpec,
    grid: Grid,
    carry: Vec<f64>,
    sd: Vec<f64>,
    mean: Vec<f64>,
}

impl BridgeSampler {
    pub fn new(spec: BridgeSpec, grid: &Grid) -> Result<Self> {
        let tol = 1e-9 * spec.length().max(1.0);
        if (grid.left() - spec.left_x).abs() > tol || (grid.right() - spec.right_x).abs() > tol {
            return domain(format!(
                "grid [{}, {}] does not match bridge interval [{}, {}]",
                grid.left(),
                grid.right(),
                spec.left_x,
                spec.right_x
            ));
        }
        let x = grid.points();
        let b = grid.right();
        let n = x.len();
        let mut carry = vec![0.0; n];
        let mut sd = vec![0.0; n];
        for i in 1..n - 1 {
            let dx = x[i] - x[i - 1];
            let rest = b - x[i - 1];
            carry[i] = 1.0 - dx / rest;
            sd[i] = (spec.rate * dx * (b - x[i]) / rest).sqrt();
        }
        let mean = x.iter().map(|&xi| spec.mean_unchecked(xi)).collect::<Vec<_>>();
        let mut mean = mean;
        mean[0] = spec.left_y;
        mean[n - 1] = spec.right_y;
        Ok(Self { spec, grid: grid.clone(), carry, sd, mean })
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean_path(&self) -> &[f64] {
        &self.mean
    }

    /// Zero-endpoint bridge noise.
    pub fn noise_into(&self, rng: &mut SimRng, out: &mut [f64]) {
        let n = out.len();
        out[0] = 0.0;
        for i in 1..n - 1 {
            let z: f64 = StandardNormal.sample(rng);
            out[i] = self.carry[i] * out[i - 1] + self.sd[i] * z;
        }
        out[n - 1] = 0.0;
    }

    pub fn sample_into(&self, rng: &mut SimRng, out: &mut [f64]) {
        self.noise_into(rng, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> SampledPath {
        let mut values = vec![0.0; self.grid.len()];
        self.sample_into(rng, &mut values);
        SampledPath { grid: self.grid.clone(), values }
    }

    /// Fraction of `n` sampled paths satisfying `event`.
    pub fn event_fraction(
        &self,
        n: u64,
        rng: &RngHandle,
        event: impl Fn(&[f64]) -> bool + Sync,
    ) -> TailEstimate {
        let hits = chunked_reduce(
            n,
            rng,
            |h, count| {
                let mut rng = h.rng();
                let mut buf = vec![0.0; self.grid.len()];
                (0..count)
                    .filter(|_| {
                        self.sample_into(&mut rng, &mut buf);
                        event(&buf)
                    })
                    .count() as u64
            },
            |a, b| a + b,
        );
        TailEstimate::from_counts(hits, n, Method::Naive)
    }
}

/// Fills `out` with an exact bridge of the given rate on the abscissae `x`,
/// pinned to `out[0]` and `out[last]` (which are left untouched).
pub fn fill_bridge(x: &[f64], rate: f64, rng: &mut SimRng, out: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(n, out.len());
    let (b, yb) = (x[n - 1], out[n - 1]);
    for i in 1..n - 1 {
        let dx = x[i] - x[i - 1];
        let rest = b - x[i - 1];
        let z: f64 = StandardNormal.sample(rng);
        let sd = (rate * dx * (b - x[i]) / rest).sqrt();
        out[i] = out[i - 1] + dx / rest * (yb - out[i - 1]) + sd * z;
    }
}

/// Log density of a Brownian increment `d` over time `dt`.
pub fn ln_transition(d: f64, dt: f64, rate: f64) -> f64 {
    let var = rate * dt;
    -0.5 * d * d / var - 0.5 * (2.0 * PI * var).ln()
}

/// One exact draw of the bridge on `grid`.
pub fn sample_bridge(spec: &BridgeSpec, grid: &Grid, rng: &RngHandle) -> Result<SampledPath> {
    let sampler = BridgeSampler::new(*spec, grid)?;
    Ok(sampler.sample(&mut rng.rng()))
}

/// `P(sup B >= M sigma_I) = exp(-M^2/2)` for a zero-endpoint bridge, where
/// `sigma_I` is its largest standard deviation. Negative `M` gives 1.
pub fn sup_tail_exact(m: f64) -> f64 {
    if m <= 0.0 {
        1.0
    } else {
        (-0.5 * m * m).exp()
    }
}

/// Bound `3 exp(-M^2/8)` on `P(sup_J B >= M sigma_J)` for any subinterval `J`.
pub fn restricted_sup_tail_bound(m: f64) -> f64 {
    (3.0 * (-m * m / 8.0).exp()).min(1.0)
}

/// `(lower, upper)` bounds on `P(N(0, sigma^2) >= x)`, valid for
/// `x >= sqrt(4/3) sigma`.
pub fn gaussian_tail_sandwich(x: f64, sigma: f64) -> Result<(f64, f64)> {
    let (lo, hi) = ln_gaussian_tail_sandwich(x, sigma)?;
    Ok((lo.exp(), hi.exp()))
}

/// Logarithms of [`gaussian_tail_sandwich`], usable far past underflow.
pub fn ln_gaussian_tail_sandwich(x: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return domain("sigma must be positive");
    }
    if x < (4.0f64 / 3.0).sqrt() * sigma {
        return domain(format!("x = {x} below sqrt(4/3) * sigma = {}", (4.0f64 / 3.0).sqrt() * sigma));
    }
    let exponent = -x * x / (2.0 * sigma * sigma);
    let lower = -0.5 * (2.0 * PI).ln() + (sigma / (4.0 * x)).ln() + exponent;
    Ok((lower, exponent))
}

/// Variance `4 z^3 / 3` of the integral over `[-z, z]` of a rate-two
/// zero-endpoint bridge.
pub fn bridge_integral_variance(z: f64) -> f64 {
    4.0 * z.powi(3) / 3.0
}

/// Monte Carlo estimate of `P(inf_{[0,r]} B < -eta K)` for the rate-two
/// bridge from `(0,0)` to `(r, K r)`, evaluated on a grid of step `grid_step`.
pub fn line_avoidance_tail(
    k: f64,
    r: f64,
    eta: f64,
    n: u64,
    grid_step: f64,
    rng: &RngHandle,
) -> Result<TailEstimate> {
    if !(eta > 0.0) || !(r > 0.0) {
        return domain("eta and r must be positive");
    }
    if k < 0.5 * 1f64.max(1.0 / eta) {
        return domain(format!("K = {k} below max(1, 1/eta)/2"));
    }
    if n == 0 {
        return domain("need at least one sample");
    }
    let spec = BridgeSpec::rate_two(0.0, r, 0.0, k * r)?;
    let grid = Grid::uniform(0.0, r, grid_step)?;
    let sampler = BridgeSampler::new(spec, &grid)?;
    let level = -eta * k;
    Ok(sampler.event_fraction(n, rng, |v| v.iter().any(|&y| y < level)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, ks_two_sample_critical, Moments};
    use rand::SeedableRng;

    fn spec(a: f64, b: f64, ya: f64, yb: f64, rate: f64) -> BridgeSpec {
        BridgeSpec::new(a, b, ya, yb, rate).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(spec(-2.0, 2.0, -4.0, -4.0, 2.0).mean(0.0).unwrap(), -4.0);
        assert_eq!(spec(0.0, 1.0, 0.0, 1.0, 1.0).mean(0.5).unwrap(), 0.5);
        let th: f64 = 9.0;
        let s = spec(-th.sqrt(), th.sqrt(), -th, -th, 2.0);
        assert_eq!(s.mean(th.sqrt()).unwrap(), -th);
        assert_eq!(s.mean(-th.sqrt()).unwrap(), -th);
        assert!(s.mean(4.0).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(spec(-2.0, 2.0, -4.0, -4.0, 2.0).variance(0.0).unwrap(), 2.0);
        assert_eq!(spec(0.0, 1.0, 0.0, 0.0, 1.0).variance(0.5).unwrap(), 0.25);
        assert_eq!(spec(0.0, 3.0, 1.0, 2.0, 2.0).variance(0.0).unwrap(), 0.0);
        assert!(spec(0.0, 1.0, 0.0, 0.0, 1.0).variance(-0.1).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(BridgeSpec::new(1.0, 1.0, 0.0, 0.0, 2.0).is_err());
        assert!(BridgeSpec::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn endpoint_only_grid() {
        let s = spec(0.0, 1.0, 3.0, -1.0, 2.0);
        let g = Grid::new(vec![0.0, 1.0]).unwrap();
        let p = sample_bridge(&s, &g, &RngHandle::new(1)).unwrap();
        assert_eq!(p.values, vec![3.0, -1.0]);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let s = spec(0.0, 1.0, 0.0, 0.0, 2.0);
        let g = Grid::uniform(0.0, 2.0, 0.1).unwrap();
        assert!(sample_bridge(&s, &g, &RngHandle::new(1)).is_err());
    }

    #[test]
    fn nonuniform_grid_marginals() {
        // Mean and variance at every point within 4 standard errors.
        let s = spec(-1.0, 2.0, 0.5, -1.0, 2.0);
        let g = Grid::new(vec![-1.0, -0.9, -0.2, 0.0, 0.7, 1.5, 1.95, 2.0]).unwrap();
        let sampler = BridgeSampler::new(s, &g).unwrap();
        let mut rng = SimRng::seed_from_u64(5);
        let n = 100_000;
        let mut stats = vec![Moments::default(); g.len()];
        let mut sq = vec![Moments::default(); g.len()];
        let mut buf = vec![0.0; g.len()];
        for _ in 0..n {
            sampler.sample_into(&mut rng, &mut buf);
            for (i, v) in buf.iter().enumerate() {
                stats[i].push(*v);
                let m = s.mean(g.points()[i]).unwrap();
                sq[i].push((v - m).powi(2));
            }
        }
        for (i, &x) in g.points().iter().enumerate().skip(1).take(g.len() - 2) {
            let m = s.mean(x).unwrap();
            let var = s.variance(x).unwrap();
            assert!((stats[i].mean() - m).abs() < 4.0 * (var / n as f64).sqrt());
            // Var of (X - m)^2 for a normal is 2 var^2.
            assert!((sq[i].mean() - var).abs() < 4.0 * (2.0 * var * var / n as f64).sqrt());
        }
    }

    #[test]
    fn time_reversal_law() {
        let s = spec(0.0, 2.0, 1.0, -0.5, 2.0);
        let g = Grid::new(vec![0.0, 0.3, 0.5, 1.4, 2.0]).unwrap();
        let gr = g.reflected();
        let fwd = BridgeSampler::new(s, &g).unwrap();
        let rev = BridgeSampler::new(s.reversed(), &gr).unwrap();
        let mut rng = SimRng::seed_from_u64(11);
        let n = 20_000;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            // Point x = 0.5 in the forward grid is point 1.5 in the reflected grid,
            // i.e. index len-1-2 of the reversed sample.
            a.push(fwd.sample(&mut rng).values[2]);
            b.push(rev.sample(&mut rng).values[g.len() - 1 - 2]);
        }
        assert!(ks_two_sample(&a, &b) < ks_two_sample_critical(n, n, 0.001));
    }

    #[test]
    fn bridge_of_linear_is_zero() {
        let g = Grid::uniform(-1.0, 3.0, 0.25).unwrap();
        let p = SampledPath::from_fn(&g, |x| 2.5 * x - 1.0);
        let b = p.bridge_of(-0.5, 2.0).unwrap();
        assert!(b.values.iter().all(|v| v.abs() < 1e-12));
        assert!(p.bridge_of(-0.4, 2.0).is_err());
    }

    #[test]
    fn bridge_of_reconstructs() {
        let s = spec(-2.0, 2.0, -4.0, -4.0, 2.0);
        let g = Grid::uniform(-2.0, 2.0, 0.01).unwrap();
        let p = sample_bridge(&s, &g, &RngHandle::new(9)).unwrap();
        let full = p.bridge_of(-2.0, 2.0).unwrap();
        for (a, b) in full.values.iter().zip(&p.values) {
            assert!((a - (b + 4.0)).abs() < 1e-12);
        }
        let part = p.bridge_of(-1.0, 0.5).unwrap();
        let (i0, i1) = (g.index_of(-1.0).unwrap(), g.index_of(0.5).unwrap());
        let back = part.with_chord(p.values[i0], p.values[i1]);
        for (a, b) in back.values.iter().zip(&p.values[i0..=i1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fill_bridge_matches_sampler_law() {
        let g = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        let mut rng = SimRng::seed_from_u64(4);
        let mut m = Moments::default();
        let mut buf = vec![0.0; g.len()];
        for _ in 0..50_000 {
            buf[0] = 1.0;
            buf[4] = 3.0;
            fill_bridge(g.points(), 2.0, &mut rng, &mut buf);
            m.push(buf[2]);
        }
        assert!((m.mean() - 2.0).abs() < 4.0 * (0.5f64 / 50_000.0).sqrt());
        assert!((m.variance() - 0.5).abs() < 0.02);
    }

    #[test]
    fn sup_tail_values() {
        assert_eq!(sup_tail_exact(0.0), 1.0);
        assert!((sup_tail_exact((2.0 * 2f64.ln()).sqrt()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sandwich_examples() {
        let (lo, hi) = gaussian_tail_sandwich(2.0, 1.0).unwrap();
        assert!((lo - 0.006_748_8).abs() < 1e-6, "{lo}");
        assert!((hi - (-2.0f64).exp()).abs() < 1e-15);
        let truth = crate::stats::norm_sf(2.0);
        assert!((truth - 0.02275).abs() < 1e-5);
        assert!(lo <= truth && truth <= hi);
        let (lo2, hi2) = gaussian_tail_sandwich(4.0, 2.0).unwrap();
        assert!((lo2 - lo).abs() < 1e-15 && (hi2 - hi).abs() < 1e-15);
        assert!(gaussian_tail_sandwich(1.0, 1.0).is_err());
    }

    #[test]
    fn integral_variance_values() {
        assert!((bridge_integral_variance(1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert!((bridge_integral_variance(2.0) - 32.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn line_avoidance_nondegenerate_and_guarded() {
        let e = line_avoidance_tail(0.5, 4.0, 1.0, 20_000, 0.01, &RngHandle::new(2)).unwrap();
        assert!(e.log_p < 0.0 && e.log_p.is_finite());
        assert!(line_avoidance_tail(0.2, 4.0, 1.0, 10, 0.01, &RngHandle::new(2)).is_err());
    }
}
