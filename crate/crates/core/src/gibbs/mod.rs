//! Line ensembles reweighted by a nearest-neighbour interaction.
//!
//! Curve `i` interacts with the curve directly above it (or the upper
//! boundary) and directly below it (or the lower boundary) through
//! `H_t(lower - upper)` with `H_t(x) = 2 t^{2/3} exp(t^{1/3} x)`; at zero
//! temperature the interaction forbids any contact. Integrals are trapezoid
//! sums on the shared grid.

mod chain;
mod coupling;
mod sample;

pub use chain::{default_burn_in, gibbs_sweep, Chain, ChainConfig, PinWindow};
pub use coupling::{monotone_gibbs_sweep_pair, monotone_gibbs_sweep_pair_pinned, MonotonePair};
pub use sample::{initial_ordered_state, sample_nonintersecting, RejectionSampler, SampleMethod};

use crate::brownian::{BridgeSampler, BridgeSpec, Grid, SampledPath};
use crate::error::{domain, Result};
use crate::estimate::{Method, TailEstimate};
use crate::parallel::chunked_reduce;
use crate::rng::RngHandle;
use crate::stats::Moments;
use std::io::Write;

/// Exponents above this make `exp` overflow; such terms count as infinite energy.
const OVERFLOW_ARG: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hamiltonian {
    /// Hard non-intersection.
    Zero,
    Finite { t: f64, t13: f64, prefactor: f64 },
}

impl Hamiltonian {
    pub fn finite(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("temperature parameter t = {t} must be positive and finite"));
        }
        Ok(Self::Finite { t, t13: t.cbrt(), prefactor: 2.0 * t.powf(2.0 / 3.0) })
    }

    pub fn t(&self) -> Option<f64> {
        match self {
            Self::Zero => None,
            Self::Finite { t, .. } => Some(*t),
        }
    }

    /// Interaction density between an upper value and a lower value.
    #[inline]
    pub fn site_energy(&self, upper: f64, lower: f64) -> f64 {
        match *self {
            Self::Zero => {
                if upper > lower {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Finite { t13, prefactor, .. } => {
                let arg = t13 * (lower - upper);
                if arg > OVERFLOW_ARG {
                    f64::INFINITY
                } else {
                    prefactor * arg.exp()
                }
            }
        }
    }
}

/// Trapezoid-weighted interaction energy between two curves over `range`.
pub(crate) fn pair_energy(
    upper: &[f64],
    lower: &[f64],
    weights: &[f64],
    range: std::ops::RangeInclusive<usize>,
    h: &Hamiltonian,
) -> f64 {
    let mut total = 0.0;
    for j in range {
        let e = h.site_energy(upper[j], lower[j]);
        if e == f64::INFINITY {
            return f64::INFINITY;
        }
        total += weights[j] * e;
    }
    total
}

/// `k` curves on one grid, ordered top (index 0) to bottom, with optional
/// boundary curves. A missing boundary is `+inf` above or `-inf` below.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    grid: Grid,
    curves: Vec<Vec<f64>>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
}

impl EnsembleState {
    pub fn new(
        grid: Grid,
        curves: Vec<Vec<f64>>,
        lower: Option<SampledPath>,
        upper: Option<SampledPath>,
    ) -> Result<Self> {
        if curves.is_empty() {
            return domain("ensemble needs at least one curve");
        }
        if curves.iter().any(|c| c.len() != grid.len()) {
            return domain("every curve must have one value per grid point");
        }
        let boundary = |b: Option<SampledPath>| -> Result<Option<Vec<f64>>> {
            match b {
                None => Ok(None),
                Some(p) if p.grid == grid => Ok(Some(p.values)),
                Some(_) => domain("boundary curve lives on a different grid"),
            }
        };
        let lower = boundary(lower)?;
        let upper = boundary(upper)?;
        Ok(Self { grid, curves, lower, upper })
    }

    /// Builds a state from paths, checking that they share one grid.
    pub fn from_paths(
        curves: Vec<SampledPath>,
        lower: Option<SampledPath>,
        upper: Option<SampledPath>,
    ) -> Result<Self> {
        let Some(first) = curves.first() else {
            return domain("ensemble needs at least one curve");
        };
        let grid = first.grid.clone();
        if curves.iter().any(|c| c.grid != grid) {
            return domain("curves live on different grids");
        }
        Self::new(grid, curves.into_iter().map(|c| c.values).collect(), lower, upper)
    }

    pub fn k(&self) -> usize {
        self.curves.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        &self.curves[i]
    }

    pub fn curve_path(&self, i: usize) -> SampledPath {
        SampledPath { grid: self.grid.clone(), values: self.curves[i].clone() }
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub(crate) fn curves_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.curves
    }

    pub fn lower(&self) -> Option<&[f64]> {
        self.lower.as_deref()
    }

    pub fn upper(&self) -> Option<&[f64]> {
        self.upper.as_deref()
    }

    pub fn left_values(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c[0]).collect()
    }

    pub fn right_values(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c[c.len() - 1]).collect()
    }

    /// The curve or boundary directly above curve `i`.
    pub(crate) fn above(&self, i: usize) -> Option<&[f64]> {
        if i == 0 {
            self.upper.as_deref()
        } else {
            Some(&self.curves[i - 1])
        }
    }

    /// The curve or boundary directly below curve `i`.
    pub(crate) fn below(&self, i: usize) -> Option<&[f64]> {
        if i + 1 == self.curves.len() {
            self.lower.as_deref()
        } else {
            Some(&self.curves[i + 1])
        }
    }

    /// Strict ordering of boundaries and curves at every grid point.
    pub fn is_strictly_ordered(&self) -> bool {
        log_boltzmann_weight(self, &Hamiltonian::Zero) == 0.0
    }

    /// Snapshot as CSV rows `curve_index,x,value`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "curve_index,x,value")?;
        for (i, c) in self.curves.iter().enumerate() {
            for (x, v) in self.grid.points().iter().zip(c) {
                writeln!(out, "{},{},{}", i + 1, x, v)?;
            }
        }
        Ok(())
    }
}

/// `-sum_i int H(L_{i+1} - L_i)` over adjacent pairs including the
/// boundaries; `0` or `-inf` at zero temperature.
pub fn log_boltzmann_weight(state: &EnsembleState, h: &Hamiltonian) -> f64 {
    let w = state.grid.trapezoid_weights();
    let all = 0..=state.grid.len() - 1;
    let mut energy = 0.0;
    for i in 0..state.k() {
        if let Some(above) = state.above(i) {
            energy += pair_energy(above, &state.curves[i], &w, all.clone(), h);
        }
        if energy == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
    }
    if let Some(lower) = state.lower() {
        energy += pair_energy(&state.curves[state.k() - 1], lower, &w, all, h);
    }
    -energy
}

/// Mean of the interaction weight against `lower` over free bridges drawn
/// from `spec` on the grid of `lower`. `None` stands for `lower = -inf`.
///
/// At zero temperature this is the avoidance frequency and consumes random
/// numbers exactly as the plain avoidance estimator does.
pub fn estimate_partition_function(
    spec: &BridgeSpec,
    grid: &Grid,
    lower: Option<&SampledPath>,
    h: &Hamiltonian,
    n: u64,
    rng: &RngHandle,
) -> Result<TailEstimate> {
    if n == 0 {
        return domain("need at least one sample");
    }
    let Some(lower) = lower else {
        return Ok(TailEstimate {
            log_p: 0.0,
            stderr_log: 0.0,
            n,
            method: Method::Naive,
            hits: n,
            upper_log: 0.0,
        });
    };
    if lower.grid != *grid {
        return domain("lower boundary lives on a different grid");
    }
    let sampler = BridgeSampler::new(*spec, grid)?;
    let barrier = &lower.values;
    match h {
        Hamiltonian::Zero => Ok(sampler.event_fraction(n, rng, |v| strictly_above(v, barrier))),
        Hamiltonian::Finite { .. } => {
            let weights = grid.trapezoid_weights();
            let last = grid.len() - 1;
            let (m, hits) = chunked_reduce(
                n,
                rng,
                |hnd, count| {
                    let mut r = hnd.rng();
                    let mut buf = vec![0.0; grid.len()];
                    let mut m = Moments::default();
                    let mut hits = 0u64;
                    for _ in 0..count {
                        sampler.sample_into(&mut r, &mut buf);
                        let wgt = (-pair_energy(&buf, barrier, &weights, 0..=last, h)).exp();
                        if wgt > 0.0 {
                            hits += 1;
                        }
                        m.push(wgt);
                    }
                    (m, hits)
                },
                |(a, ha), (b, hb)| (a.merge(b), ha + hb),
            );
            Ok(TailEstimate::from_weights(&m, hits, Method::Naive))
        }
    }
}

pub(crate) fn strictly_above(values: &[f64], barrier: &[f64]) -> bool {
    values.iter().zip(barrier).all(|(v, b)| v > b)
}

/// Law of the top curve at an interior grid point `x0` given its two side
/// bridges and everything else: a normal `N(mean, variance)` reweighted by
/// `exp(log_wpt(x))`.
#[derive(Debug, Clone)]
pub struct PointLaw {
    pub x0: f64,
    pub mean: f64,
    pub variance: f64,
    grid: Grid,
    index: usize,
    left_bridge: Vec<f64>,
    right_bridge: Vec<f64>,
    left_value: f64,
    right_value: f64,
    below: Option<Vec<f64>>,
    weights: Vec<f64>,
    h: Hamiltonian,
}

impl PointLaw {
    /// The top curve rebuilt from its side bridges with value `x` at `x0`.
    pub fn reconstruct(&self, x: f64) -> SampledPath {
        let p = self.grid.points();
        let (a, b, m) = (p[0], p[p.len() - 1], self.x0);
        let mut values = Vec::with_capacity(p.len());
        for (j, &u) in p.iter().enumerate() {
            let v = if j <= self.index {
                self.left_bridge[j] + (m - u) / (m - a) * self.left_value + (u - a) / (m - a) * x
            } else {
                self.right_bridge[j - self.index] + (b - u) / (b - m) * x + (u - m) / (b - m) * self.right_value
            };
            values.push(v);
        }
        SampledPath { grid: self.grid.clone(), values }
    }

    /// Log interaction weight of the reconstructed curve against the curve
    /// (or boundary) below; nondecreasing in `x`.
    pub fn log_wpt(&self, x: f64) -> f64 {
        let Some(below) = &self.below else {
            return 0.0;
        };
        let top = self.reconstruct(x);
        -pair_energy(&top.values, below, &self.weights, 0..=self.grid.len() - 1, &self.h)
    }
}

pub fn conditional_point_law(
    state: &EnsembleState,
    x0: f64,
    h: &Hamiltonian,
    rate: f64,
) -> Result<PointLaw> {
    let grid = state.grid();
    let index = match grid.index_of(x0) {
        Some(i) if i > 0 && i + 1 < grid.len() => i,
        _ => return domain(format!("x0 = {x0} is not an interior grid point")),
    };
    if state.upper().is_some() {
        return domain("point law is defined for a top curve without a ceiling");
    }
    let top = state.curve_path(0);
    let x0 = grid.points()[index];
    let (a, b) = (grid.left(), grid.right());
    let spec = BridgeSpec::new(a, b, top.values[0], top.values[grid.len() - 1], rate)?;
    Ok(PointLaw {
        x0,
        mean: spec.mean(x0)?,
        variance: spec.variance(x0)?,
        grid: grid.clone(),
        index,
        left_bridge: top.bridge_of(a, x0)?.values,
        right_bridge: top.bridge_of(x0, b)?.values,
        left_value: spec.left_y,
        right_value: spec.right_y,
        below: state.below(0).map(|s| s.to_vec()),
        weights: grid.trapezoid_weights(),
        h: *h,
    })
}
