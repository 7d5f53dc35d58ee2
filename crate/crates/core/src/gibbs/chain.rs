//! Metropolis-Hastings resampling chain.
//!
//! A sweep visits the curves top to bottom. Each curve is cut into blocks
//! (one block covering the whole curve by default); a block is replaced by
//! a free bridge between its current end values, optionally mixed with the
//! current values by a preconditioned Crank-Nicolson step, and accepted
//! with the change in interaction weight. Curves above the one being
//! updated already carry their new values.

use super::{pair_energy, EnsembleState, Hamiltonian};
use crate::brownian::{fill_bridge, ln_transition};
use crate::error::{domain, Error, Result};
use crate::rng::{RngHandle, SimRng};
use rand::Rng;

/// The top curve must pass through `[center - half_width, center + half_width]` at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinWindow {
    pub x: f64,
    pub center: f64,
    pub half_width: f64,
}

impl PinWindow {
    pub fn new(x: f64, center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() {
            return domain(format!("pin window half width {half_width} must be positive"));
        }
        Ok(Self { x, center, half_width })
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo() <= y && y <= self.hi()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Every curve value must satisfy `|value| <= sup_bound`.
    pub sup_bound: f64,
    /// Windows constraining the top curve.
    pub pins: Vec<PinWindow>,
    pub sweeps_per_sample: usize,
    /// Crank-Nicolson step in `(0, 1]`; `1` proposes a fresh bridge.
    pub proposal_scale: f64,
    /// Block length in grid intervals; `None` resamples whole curves.
    pub block_len: Option<usize>,
    pub max_consecutive_rejections: u64,
    /// Diffusion rate of the underlying bridges.
    pub rate: f64,
}

impl ChainConfig {
    pub fn new(sup_bound: f64) -> Result<Self> {
        if !(sup_bound > 0.0) {
            return domain(format!("sup bound {sup_bound} must be positive"));
        }
        Ok(Self {
            sup_bound,
            pins: Vec::new(),
            sweeps_per_sample: 1,
            proposal_scale: 1.0,
            block_len: None,
            max_consecutive_rejections: 10_000,
            rate: 2.0,
        })
    }

    pub fn with_pins(mut self, pins: Vec<PinWindow>) -> Self {
        self.pins = pins;
        self
    }

    pub fn with_block_len(mut self, len: usize) -> Self {
        self.block_len = Some(len);
        self
    }

    pub fn with_proposal_scale(mut self, scale: f64) -> Self {
        self.proposal_scale = scale;
        self
    }

    pub fn with_sweeps_per_sample(mut self, sweeps: usize) -> Self {
        self.sweeps_per_sample = sweeps;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.proposal_scale > 0.0 && self.proposal_scale <= 1.0) {
            return domain(format!("proposal scale {} outside (0, 1]", self.proposal_scale));
        }
        if self.sweeps_per_sample == 0 {
            return domain("sweeps per sample must be at least 1");
        }
        if matches!(self.block_len, Some(l) if l < 2) {
            return domain("blocks need at least two grid intervals");
        }
        if !(self.rate > 0.0) {
            return domain("rate must be positive");
        }
        Ok(())
    }
}

/// Default burn-in: ten sweeps per curve per grid point.
pub fn default_burn_in(k: usize, grid_len: usize) -> usize {
    10 * k * grid_len
}

#[derive(Debug, Clone)]
pub struct Chain {
    state: EnsembleState,
    h: Hamiltonian,
    cfg: ChainConfig,
    weights: Vec<f64>,
    /// `(grid index, lo, hi)` for each pin on the top curve, by index.
    pins: Vec<(usize, f64, f64)>,
    rng: SimRng,
    consecutive_rejections: u64,
    proposals: u64,
    accepted: u64,
    prop: Vec<f64>,
    noise: Vec<f64>,
}

impl Chain {
    /// Checks that `state` satisfies every constraint, which also shows the
    /// constraint set is nonempty.
    pub fn new(state: EnsembleState, h: Hamiltonian, cfg: ChainConfig, rng: &RngHandle) -> Result<Self> {
        cfg.validate()?;
        let grid = state.grid().clone();
        if grid.len() < 3 {
            return domain("chain needs at least one interior grid point");
        }
        let mut pins = Vec::with_capacity(cfg.pins.len());
        for p in &cfg.pins {
            match grid.index_of(p.x) {
                Some(i) if i > 0 && i + 1 < grid.len() => pins.push((i, p.lo(), p.hi())),
                _ => return domain(format!("pin at x = {} is not an interior grid point", p.x)),
            }
        }
        pins.sort_by_key(|p| p.0);
        if pins.windows(2).any(|w| w[0].0 == w[1].0) {
            return domain("two pins at the same grid point");
        }
        let top = state.curve(0);
        if let Some(&(i, lo, hi)) = pins.iter().find(|&&(i, lo, hi)| !(lo <= top[i] && top[i] <= hi)) {
            return Err(Error::Feasibility(format!(
                "initial top curve value {} at grid index {i} is outside its pin window [{lo}, {hi}]",
                top[i]
            )));
        }
        if state.curves().iter().flatten().any(|v| v.abs() > cfg.sup_bound) {
            return Err(Error::Feasibility(format!(
                "initial state exceeds the sup bound {}",
                cfg.sup_bound
            )));
        }
        if super::log_boltzmann_weight(&state, &h) == f64::NEG_INFINITY {
            return Err(Error::Feasibility("initial state has zero interaction weight".into()));
        }
        let n = grid.len();
        Ok(Self {
            weights: grid.trapezoid_weights(),
            state,
            h,
            cfg,
            pins,
            rng: rng.rng(),
            consecutive_rejections: 0,
            proposals: 0,
            accepted: 0,
            prop: vec![0.0; n],
            noise: vec![0.0; n],
        })
    }

    pub fn state(&self) -> &EnsembleState {
        &self.state
    }

    pub fn into_state(self) -> EnsembleState {
        self.state
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// One pass over all curves, top to bottom.
    pub fn sweep(&mut self) -> Result<()> {
        let n = self.state.grid().len();
        for i in 0..self.state.k() {
            match self.cfg.block_len {
                None => self.update_block(i, 0, n - 1)?,
                Some(len) => {
                    let len = len.min(n - 1);
                    let offset = self.rng.random_range(0..len);
                    let mut start = 0usize;
                    let mut end = if offset == 0 { len } else { offset };
                    loop {
                        let end_c = end.min(n - 1);
                        if end_c >= start + 2 {
                            self.update_block(i, start, end_c)?;
                        }
                        if end_c == n - 1 {
                            break;
                        }
                        start = end_c;
                        end = start + len;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn run(&mut self, sweeps: usize) -> Result<()> {
        for _ in 0..sweeps {
            self.sweep()?;
        }
        Ok(())
    }

    /// Advances by `sweeps_per_sample` sweeps.
    pub fn next_sample(&mut self) -> Result<&EnsembleState> {
        self.run(self.cfg.sweeps_per_sample)?;
        Ok(&self.state)
    }

    fn block_energy(&self, i: usize, values: &[f64], j0: usize, j1: usize) -> f64 {
        let mut e = 0.0;
        if let Some(above) = self.state.above(i) {
            e += pair_energy(&above[j0..=j1], values, &self.weights[j0..=j1], 0..=j1 - j0, &self.h);
        }
        if e < f64::INFINITY {
            if let Some(below) = self.state.below(i) {
                e += pair_energy(values, &below[j0..=j1], &self.weights[j0..=j1], 0..=j1 - j0, &self.h);
            }
        }
        e
    }

    /// Free-bridge log density of the values at `anchors` (block-relative
    /// indices, ends included).
    fn ln_anchor_density(&self, x: &[f64], values: &[f64], anchors: &[usize]) -> f64 {
        let rate = self.cfg.rate;
        let mut total = 0.0;
        for w in anchors.windows(2) {
            total += ln_transition(values[w[1]] - values[w[0]], x[w[1]] - x[w[0]], rate);
        }
        let last = values.len() - 1;
        total - ln_transition(values[last] - values[0], x[last] - x[0], rate)
    }

    fn update_block(&mut self, i: usize, j0: usize, j1: usize) -> Result<()> {
        let grid = self.state.grid().clone();
        let x = &grid.points()[j0..=j1];
        let len = j1 - j0 + 1;
        let mut prop = std::mem::take(&mut self.prop);
        let mut noise = std::mem::take(&mut self.noise);
        let (prop_b, noise_b) = (&mut prop[..len], &mut noise[..len]);
        let cur: Vec<f64> = self.state.curve(i)[j0..=j1].to_vec();
        prop_b[0] = cur[0];
        prop_b[len - 1] = cur[len - 1];

        let pins: Vec<(usize, f64, f64)> = if i == 0 {
            self.pins
                .iter()
                .filter(|p| p.0 > j0 && p.0 < j1)
                .map(|&(j, lo, hi)| (j - j0, lo, hi))
                .collect()
        } else {
            Vec::new()
        };

        let mut log_correction = 0.0;
        if pins.is_empty() {
            let beta = self.cfg.proposal_scale;
            if beta >= 1.0 {
                fill_bridge(x, self.cfg.rate, &mut self.rng, prop_b);
            } else {
                noise_b[0] = 0.0;
                noise_b[len - 1] = 0.0;
                fill_bridge(x, self.cfg.rate, &mut self.rng, noise_b);
                let keep = (1.0 - beta * beta).sqrt();
                let (a, b) = (x[0], x[len - 1]);
                for j in 1..len - 1 {
                    let line = cur[0] + (x[j] - a) / (b - a) * (cur[len - 1] - cur[0]);
                    prop_b[j] = line + keep * (cur[j] - line) + beta * noise_b[j];
                }
            }
        } else {
            // Pin values uniform in their windows, free bridges in between.
            let mut anchors = Vec::with_capacity(pins.len() + 2);
            anchors.push(0);
            for &(j, lo, hi) in &pins {
                prop_b[j] = lo + (hi - lo) * self.rng.random::<f64>();
                anchors.push(j);
            }
            anchors.push(len - 1);
            for w in anchors.windows(2) {
                if w[1] > w[0] + 1 {
                    fill_bridge(&x[w[0]..=w[1]], self.cfg.rate, &mut self.rng, &mut prop_b[w[0]..=w[1]]);
                }
            }
            log_correction =
                self.ln_anchor_density(x, prop_b, &anchors) - self.ln_anchor_density(x, &cur, &anchors);
        }

        let u: f64 = self.rng.random();
        self.proposals += 1;
        let mut accept = prop_b.iter().all(|v| v.abs() <= self.cfg.sup_bound)
            && pins.iter().all(|&(j, lo, hi)| lo <= prop_b[j] && prop_b[j] <= hi);
        if accept {
            let e_new = self.block_energy(i, prop_b, j0, j1);
            accept = e_new < f64::INFINITY && {
                let e_old = self.block_energy(i, &cur, j0, j1);
                u.ln() < e_old - e_new + log_correction
            };
        }
        if accept {
            self.state.curves_mut()[i][j0..=j1].copy_from_slice(prop_b);
            self.accepted += 1;
            self.consecutive_rejections = 0;
        } else {
            self.consecutive_rejections += 1;
        }
        self.prop = prop;
        self.noise = noise;
        if self.consecutive_rejections >= self.cfg.max_consecutive_rejections {
            return Err(Error::Feasibility(format!(
                "{} consecutive rejections; the constraint set looks empty or the proposals too wide \
                 (try a block length)",
                self.consecutive_rejections
            )));
        }
        Ok(())
    }
}

/// One sweep from `state`; a convenience over [`Chain`].
pub fn gibbs_sweep(
    state: EnsembleState,
    h: &Hamiltonian,
    cfg: &ChainConfig,
    rng: &RngHandle,
) -> Result<EnsembleState> {
    let mut chain = Chain::new(state, *h, cfg.clone(), rng)?;
    chain.sweep()?;
    Ok(chain.into_state())
}
