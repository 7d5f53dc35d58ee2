//! Shape of a bridge above `-x^2` pinned near a high value at the origin.

use super::grids::grid_through;
use crate::brownian::{Grid, SampledPath};
use crate::error::{domain, Result};
use crate::geometry::tri;
use crate::gibbs::{Chain, ChainConfig, EnsembleState, Hamiltonian, PinWindow};
use crate::rng::RngHandle;
use crate::stats::{effective_sample_size, quantile, quantile_sorted, split_rhat};
use rayon::prelude::*;
use serde::Serialize;

/// Statement of the model the shape report is computed on.
pub const SHAPE_SURROGATE: &str = "surrogate: single rate-two bridge above the fixed curve -x^2 \
    (standing in for the second curve), top value at 0 held in a window around theta";

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeConfig {
    /// Endpoints sit at `+-endpoint_factor * sqrt(theta)`.
    pub endpoint_factor: f64,
    /// Half width of the window around `theta` at the origin.
    pub pin_half_width: f64,
    /// Height of the endpoints above `-x^2`.
    pub margin: f64,
    pub grid_step: f64,
    /// Width in `x` of the chain's resampling blocks.
    pub block_width: f64,
    pub chains: usize,
    /// Sweeps between recorded samples.
    pub thin: usize,
    /// Fraction of each chain discarded as burn-in.
    pub burn_in_fraction: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            endpoint_factor: 2.0,
            pin_half_width: 1.0,
            margin: 1.0,
            grid_step: 0.05,
            block_width: 1.0,
            chains: 4,
            thin: 10,
            burn_in_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub header: String,
    pub theta: f64,
    pub x: Vec<f64>,
    /// Deviation `path - reference`, reference being the tent inside
    /// `[-sqrt(theta), sqrt(theta)]` and `-x^2` outside.
    pub quantile_levels: Vec<f64>,
    /// `quantiles[i][q]` at `x[i]` and level `quantile_levels[q]`.
    pub quantiles: Vec<Vec<f64>>,
    /// `sup |path - tent| / theta^{1/4}` over `[-sqrt(theta), sqrt(theta)]`, per sample.
    pub inner_sup: Vec<f64>,
    /// `sup |path + x^2| / (theta^{1/4} log theta)` over the outer region, per sample.
    pub outer_sup: Vec<f64>,
    /// 95th percentile of `|path + x^2|` pooled over outer grid points and samples.
    pub outer_abs_q95: f64,
    /// `(path - tent) / theta^{1/4}` at `x = -sqrt(theta)/2`, per sample.
    pub mid_deviation: Vec<f64>,
    /// Split-R-hat of the value at `x = -sqrt(theta)/2` across chains.
    pub rhat: f64,
    /// Summed effective sample size of that value.
    pub ess: f64,
    pub acceptance_rate: f64,
}

impl ShapeReport {
    pub fn inner_sup_median(&self) -> f64 {
        quantile(&self.inner_sup, 0.5)
    }

    /// Fraction of samples more than `m theta^{1/4}` below the tent at `-sqrt(theta)/2`.
    pub fn mid_drop_fraction(&self, m: f64) -> f64 {
        self.mid_deviation.iter().filter(|&&d| d < -m).count() as f64 / self.mid_deviation.len() as f64
    }
}

struct ChainOutput {
    deviations: Vec<Vec<f64>>,
    inner_sup: Vec<f64>,
    outer_sup: Vec<f64>,
    outer_abs: Vec<f64>,
    mid: Vec<f64>,
    mid_values: Vec<f64>,
    acceptance: f64,
}

/// Runs `cfg.chains` chains of `sweeps` sweeps each on the single bridge
/// from `(-L sqrt(theta), -L^2 theta + margin)` to the mirror point, above
/// `-x^2`, with its value at 0 held in `[theta - eps, theta + eps]`.
pub fn conditioned_shape(theta: f64, sweeps: usize, rng: &RngHandle, cfg: &ShapeConfig) -> Result<ShapeReport> {
    if !(theta >= 4.0) {
        return domain(format!("theta = {theta} below 4"));
    }
    if !(cfg.endpoint_factor > 1.0 && cfg.pin_half_width > 0.0 && cfg.margin > 0.0 && cfg.block_width > 0.0) {
        return domain("endpoint factor must exceed 1; widths and margin must be positive");
    }
    if cfg.chains < 2 || cfg.thin == 0 || !(0.0..1.0).contains(&cfg.burn_in_fraction) {
        return domain("need two chains, positive thinning and a burn-in fraction in [0, 1)");
    }
    let r = theta.sqrt();
    let outer = cfg.endpoint_factor * r;
    let grid = grid_through(&[-outer, -r, -0.5 * r, 0.0, 0.5 * r, r, outer], cfg.grid_step)?;
    let burn = (sweeps as f64 * cfg.burn_in_fraction).round() as usize;
    if (sweeps - burn) / cfg.thin < 2 {
        return domain("too few sweeps to record two samples per chain");
    }
    let outputs: Vec<Result<ChainOutput>> = (0..cfg.chains as u64)
        .into_par_iter()
        .map(|c| run_chain(theta, &grid, sweeps, burn, cfg, &rng.substream(c)))
        .collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let x = grid.points().to_vec();
    let mut quantiles = Vec::with_capacity(x.len());
    let mut column = Vec::new();
    for i in 0..x.len() {
        column.clear();
        column.extend(outputs.iter().flat_map(|o| o.deviations.iter().map(move |d| d[i])));
        column.sort_by(f64::total_cmp);
        quantiles.push(QUANTILE_LEVELS.iter().map(|&q| quantile_sorted(&column, q)).collect());
    }
    let gather = |f: fn(&ChainOutput) -> &Vec<f64>| -> Vec<f64> { outputs.iter().flat_map(|o| f(o).clone()).collect() };
    let mid_chains: Vec<Vec<f64>> = outputs.iter().map(|o| o.mid_values.clone()).collect();
    Ok(ShapeReport {
        header: SHAPE_SURROGATE.to_string(),
        theta,
        x,
        quantile_levels: QUANTILE_LEVELS.to_vec(),
        quantiles,
        inner_sup: gather(|o| &o.inner_sup),
        outer_sup: gather(|o| &o.outer_sup),
        outer_abs_q95: quantile(&gather(|o| &o.outer_abs), 0.95),
        mid_deviation: gather(|o| &o.mid),
        rhat: split_rhat(&mid_chains),
        ess: mid_chains.iter().map(|c| effective_sample_size(c)).sum(),
        acceptance_rate: outputs.iter().map(|o| o.acceptance).sum::<f64>() / outputs.len() as f64,
    })
}

fn run_chain(
    theta: f64,
    grid: &Grid,
    sweeps: usize,
    burn: usize,
    cfg: &ShapeConfig,
    rng: &RngHandle,
) -> Result<ChainOutput> {
    let r = theta.sqrt();
    let margin = cfg.margin;
    let init: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| if x.abs() <= r { tri(theta, x).max(-x * x + margin) } else { -x * x + margin })
        .collect();
    let lower = SampledPath::from_fn(grid, |x| -x * x);
    let state = EnsembleState::new(grid.clone(), vec![init], Some(lower), None)?;
    let block = ((cfg.block_width / cfg.grid_step).round() as usize).max(2);
    let sup_bound = 10.0 * (theta + cfg.endpoint_factor.powi(2) * theta) + 100.0;
    let chain_cfg = ChainConfig::new(sup_bound)?
        .with_pins(vec![PinWindow::new(0.0, theta, cfg.pin_half_width)?])
        .with_block_len(block)
        .with_sweeps_per_sample(cfg.thin);
    let mut chain = Chain::new(state, Hamiltonian::Zero, chain_cfg, rng)?;
    chain.run(burn)?;

    let x = grid.points();
    let reference: Vec<f64> = x.iter().map(|&x| if x.abs() <= r { tri(theta, x) } else { -x * x }).collect();
    let inner: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= r + 1e-9).collect();
    let outer: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() >= r - 1e-9).collect();
    let mid = grid.index_of(-0.5 * r).expect("breakpoint on grid");
    let scale = theta.powf(0.25);
    let outer_scale = scale * theta.ln();

    let samples = (sweeps - burn) / cfg.thin;
    let mut out = ChainOutput {
        deviations: Vec::with_capacity(samples),
        inner_sup: Vec::with_capacity(samples),
        outer_sup: Vec::with_capacity(samples),
        outer_abs: Vec::with_capacity(samples * outer.len()),
        mid: Vec::with_capacity(samples),
        mid_values: Vec::with_capacity(samples),
        acceptance: 0.0,
    };
    for _ in 0..samples {
        let path = chain.next_sample()?.curve(0);
        let dev: Vec<f64> = path.iter().zip(&reference).map(|(p, q)| p - q).collect();
        out.inner_sup.push(inner.iter().map(|&i| dev[i].abs()).fold(0.0, f64::max) / scale);
        let mut sup = 0.0f64;
        for &i in &outer {
            let a = (path[i] + x[i] * x[i]).abs();
            sup = sup.max(a);
            out.outer_abs.push(a);
        }
        out.outer_sup.push(sup / outer_scale);
        out.mid.push(dev[mid] / scale);
        out.mid_values.push(path[mid]);
        out.deviations.push(dev);
    }
    out.acceptance = chain.acceptance_rate();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_report_is_consistent() {
        let cfg = ShapeConfig { grid_step: 0.1, thin: 5, ..ShapeConfig::default() };
        let rep = conditioned_shape(4.0, 2000, &RngHandle::new(3), &cfg).unwrap();
        assert_eq!(rep.quantiles.len(), rep.x.len());
        for q in &rep.quantiles {
            assert!(q.windows(2).all(|w| w[0] <= w[1]));
        }
        let n = 4 * (1500 / 5);
        assert_eq!(rep.inner_sup.len(), n);
        assert!(rep.inner_sup_median() > 0.0 && rep.inner_sup_median() < 5.0);
        assert!(rep.rhat < 1.2, "{}", rep.rhat);
        // The origin stays in its window.
        let zero = rep.x.iter().position(|&x| x == 0.0).unwrap();
        assert!(rep.quantiles[zero][0] >= -1.0 && rep.quantiles[zero][4] <= 1.0);
    }

    #[test]
    fn small_theta_rejected() {
        assert!(conditioned_shape(1.0, 100, &RngHandle::new(1), &ShapeConfig::default()).is_err());
    }
}
