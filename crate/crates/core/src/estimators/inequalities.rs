//! Correlation inequalities and the sup-over-interval tail bound, checked on
//! finite ensembles.

use crate::brownian::{Grid, SampledPath};
use crate::error::{domain, Result};
use crate::gibbs::{initial_ordered_state, Chain, ChainConfig, Hamiltonian, RejectionSampler};
use crate::parallel::chunked_reduce;
use crate::rng::RngHandle;
use crate::stats::{effective_sample_size, quantile};
use rayon::prelude::*;
use serde::Serialize;

/// Conditioning events with fewer hits than this are flagged.
const MIN_CONDITION_HITS: u64 = 100;

pub const SUPINT_SURROGATE: &str = "surrogate: k non-intersecting rate-two bridges on [-3, 3] above \
    the fixed floor -x^2 - k + 1 (standing in for the rest of the ensemble), sampled by the chain";

/// `k` non-intersecting rate-two bridges on `[z1, z2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub z1: f64,
    pub z2: f64,
    /// Strictly decreasing entrance values.
    pub left: Vec<f64>,
    /// Strictly decreasing exit values.
    pub right: Vec<f64>,
    pub grid_step: f64,
}

impl EnsembleParams {
    /// `k` curves on `[0, 1]` entering and leaving at `0, -0.5, -1, ...`.
    pub fn standard(k: usize) -> Self {
        let ends: Vec<f64> = (0..k).map(|i| -0.5 * i as f64).collect();
        Self { z1: 0.0, z2: 1.0, left: ends.clone(), right: ends, grid_step: 0.01 }
    }

    pub fn k(&self) -> usize {
        self.left.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkgRow {
    /// Names of the two increasing events.
    pub events: String,
    pub level_a: f64,
    pub level_e: f64,
    pub p_a: f64,
    pub p_e: f64,
    /// `P(A and E) - P(A) P(E)`.
    pub diff: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BkRow {
    /// Level of `A = {midpoint > level}`.
    pub level_a: f64,
    /// Level of `C = {top midpoint > level}`; `-inf` is the whole space.
    pub level_c: f64,
    pub condition_hits: u64,
    /// `P(second curve in A | top curve in C) - P(top curve in A)`.
    pub diff: f64,
    pub stderr: f64,
    pub flagged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkgBkReport {
    pub k: usize,
    pub n: u64,
    pub fkg: Vec<FkgRow>,
    pub bk: Vec<BkRow>,
}

impl FkgBkReport {
    /// Every FKG row and every unflagged BK row passes.
    pub fn all_pass(&self) -> bool {
        self.fkg.iter().all(|r| r.pass) && self.bk.iter().filter(|r| !r.flagged).all(|r| r.pass)
    }
}

/// Midpoint and sup of the top two curves of one ensemble sample.
#[derive(Debug, Clone, Copy, Default)]
struct Features {
    mid1: f64,
    sup1: f64,
    mid2: f64,
    sup2: f64,
}

/// Tests positive association and the conditional domination of the
/// second curve on exact samples of the ensemble, over all pairs of the
/// given levels.
pub fn fkg_bk_report(params: &EnsembleParams, levels: &[f64], n: u64, rng: &RngHandle) -> Result<FkgBkReport> {
    if n < 2 {
        return domain("need at least two samples");
    }
    if levels.is_empty() {
        return domain("need at least one level");
    }
    let k = params.k();
    let grid = Grid::uniform(params.z1, params.z2, params.grid_step)?;
    let sampler = RejectionSampler::new(&params.left, &params.right, &grid, None, 2.0)?;
    let mid = grid.nearest_index(0.5 * (params.z1 + params.z2));
    let len = grid.len();
    let Collected(features) = chunked_reduce(
        n,
        rng,
        |h, count| {
            let mut r = h.rng();
            let mut curves = vec![vec![0.0; len]; k];
            let mut out = Vec::with_capacity(count as usize);
            for _ in 0..count {
                if let Err(e) = sampler.draw(&mut r, &mut curves) {
                    return Collected(Err(e));
                }
                let sup = |c: &[f64]| c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (mid2, sup2) = if k > 1 { (curves[1][mid], sup(&curves[1])) } else { (f64::NAN, f64::NAN) };
                out.push(Features { mid1: curves[0][mid], sup1: sup(&curves[0]), mid2, sup2 });
            }
            Collected(Ok(out))
        },
        |Collected(a), Collected(b)| {
            Collected(a.and_then(|mut a| {
                a.extend(b?);
                Ok(a)
            }))
        },
    );
    let features = features?;

    let mut fkg = Vec::new();
    type Pick = fn(&Features) -> f64;
    let mut pairs: Vec<(&str, Pick, Pick)> =
        vec![("top midpoint, top sup", |f| f.mid1, |f| f.sup1)];
    if k > 1 {
        pairs.push(("top midpoint, second midpoint", |f| f.mid1, |f| f.mid2));
        pairs.push(("top sup, second sup", |f| f.sup1, |f| f.sup2));
    }
    for (name, fa, fe) in pairs {
        for &la in levels {
            for &le in levels {
                let a: Vec<bool> = features.iter().map(|f| fa(f) > la).collect();
                let e: Vec<bool> = features.iter().map(|f| fe(f) > le).collect();
                fkg.push(fkg_row(name, la, le, &a, &e));
            }
        }
    }
    let mut bk = Vec::new();
    if k > 1 {
        let mut conds = vec![f64::NEG_INFINITY];
        conds.extend_from_slice(levels);
        for &la in levels {
            for &lc in &conds {
                let a2: Vec<bool> = features.iter().map(|f| f.mid2 > la).collect();
                let a1: Vec<bool> = features.iter().map(|f| f.mid1 > la).collect();
                let c: Vec<bool> = features.iter().map(|f| f.mid1 > lc).collect();
                bk.push(bk_row(la, lc, &a2, &a1, &c));
            }
        }
    }
    Ok(FkgBkReport { k, n, fkg, bk })
}

struct Collected(Result<Vec<Features>>);

impl Default for Collected {
    fn default() -> Self {
        Collected(Ok(Vec::new()))
    }
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

fn variance_of(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn fkg_row(events: &str, level_a: f64, level_e: f64, a: &[bool], e: &[bool]) -> FkgRow {
    let n = a.len();
    let f = |b: bool| if b { 1.0 } else { 0.0 };
    let p_a = mean(a.iter().map(|&x| f(x)), n);
    let p_e = mean(e.iter().map(|&x| f(x)), n);
    let p_ae = mean(a.iter().zip(e).map(|(&x, &y)| f(x && y)), n);
    let diff = p_ae - p_a * p_e;
    let infl: Vec<f64> = a.iter().zip(e).map(|(&x, &y)| f(x && y) - p_e * f(x) - p_a * f(y)).collect();
    let stderr = (variance_of(&infl) / n as f64).sqrt();
    FkgRow { events: events.to_string(), level_a, level_e, p_a, p_e, diff, stderr, pass: diff >= -3.0 * stderr }
}

fn bk_row(level_a: f64, level_c: f64, a2: &[bool], a1: &[bool], c: &[bool]) -> BkRow {
    let n = a2.len();
    let f = |b: bool| if b { 1.0 } else { 0.0 };
    let hits = c.iter().filter(|&&x| x).count() as u64;
    if hits == 0 {
        return BkRow {
            level_a,
            level_c,
            condition_hits: 0,
            diff: f64::NAN,
            stderr: f64::NAN,
            flagged: true,
            pass: true,
        };
    }
    let p_c = hits as f64 / n as f64;
    let p_a1 = mean(a1.iter().map(|&x| f(x)), n);
    let joint = mean(a2.iter().zip(c).map(|(&x, &y)| f(x && y)), n);
    let ratio = joint / p_c;
    let diff = ratio - p_a1;
    let infl: Vec<f64> = (0..n).map(|i| (f(a2[i] && c[i]) - ratio * f(c[i])) / p_c - f(a1[i])).collect();
    let stderr = (variance_of(&infl) / n as f64).sqrt();
    BkRow {
        level_a,
        level_c,
        condition_hits: hits,
        diff,
        stderr,
        flagged: hits < MIN_CONDITION_HITS,
        pass: diff <= 3.0 * stderr,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupTailRow {
    pub theta: f64,
    /// `P(sup_{[-1,1]} (top + x^2) >= theta)`.
    pub sup_prob: f64,
    /// `P(top(0) >= theta - 2)`.
    pub point_prob: f64,
    /// `sup_prob - 4 theta point_prob`.
    pub diff: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupTailReport {
    pub header: String,
    pub k: usize,
    pub n: u64,
    pub rows: Vec<SupTailRow>,
    /// Median and 90th percentile of `sup_{[-1,1]} (top + x^2)` on the surrogate.
    pub sup_median: f64,
    pub sup_q90: f64,
}

impl SupTailReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

const SUPINT_CHAINS: u64 = 4;
const SUPINT_THIN: usize = 5;
const SUPINT_HALF_WIDTH: f64 = 3.0;
const SUPINT_STEP: f64 = 0.05;

/// Compares `P(sup_{[-1,1]} (top + x^2) >= theta)` with
/// `4 theta P(top(0) >= theta - 2)` on the chain-sampled surrogate; `n`
/// samples are split over four chains.
pub fn sup_interval_tail_check(theta_grid: &[f64], k: usize, n: u64, rng: &RngHandle) -> Result<SupTailReport> {
    if k == 0 {
        return domain("need at least one curve");
    }
    if n < 2 * SUPINT_CHAINS {
        return domain("need at least two samples per chain");
    }
    let l = SUPINT_HALF_WIDTH;
    let grid = Grid::uniform(-l, l, SUPINT_STEP)?;
    let ends: Vec<f64> = (0..k).map(|i| -l * l + 1.0 - i as f64).collect();
    let floor = SampledPath::from_fn(&grid, |x| -x * x - k as f64 + 1.0);
    let per_chain = n.div_ceil(SUPINT_CHAINS) as usize;
    let x = grid.points().to_vec();
    let window: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= 1.0 + 1e-9).collect();
    let zero = grid.nearest_index(0.0);
    let runs: Vec<Result<Vec<(f64, f64)>>> = (0..SUPINT_CHAINS)
        .into_par_iter()
        .map(|c| {
            let init = initial_ordered_state(&ends, &ends, &grid, Some(&floor))?;
            let cfg = ChainConfig::new(1e3)?.with_block_len(20).with_sweeps_per_sample(SUPINT_THIN);
            let mut chain = Chain::new(init, Hamiltonian::Zero, cfg, &rng.substream(c))?;
            chain.run(crate::gibbs::default_burn_in(k, 20))?;
            let mut out = Vec::with_capacity(per_chain);
            for _ in 0..per_chain {
                let top = chain.next_sample()?.curve(0);
                let sup = window.iter().map(|&i| top[i] + x[i] * x[i]).fold(f64::NEG_INFINITY, f64::max);
                out.push((sup, top[zero]));
            }
            Ok(out)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let total = (per_chain as u64) * SUPINT_CHAINS;
    let sups: Vec<f64> = runs.iter().flatten().map(|s| s.0).collect();
    let mut rows = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let series: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&(s, v)| {
                        let a = if s >= theta { 1.0 } else { 0.0 };
                        let b = if v >= theta - 2.0 { 1.0 } else { 0.0 };
                        a - 4.0 * theta * b
                    })
                    .collect()
            })
            .collect();
        let all: Vec<f64> = series.iter().flatten().copied().collect();
        let sup_prob = sups.iter().filter(|&&s| s >= theta).count() as f64 / total as f64;
        let point_prob =
            runs.iter().flatten().filter(|&&(_, v)| v >= theta - 2.0).count() as f64 / total as f64;
        let diff = sup_prob - 4.0 * theta * point_prob;
        let var = variance_of(&all);
        let ess: f64 = if var > 0.0 { series.iter().map(|s| effective_sample_size(s)).sum() } else { total as f64 };
        let stderr = (var / ess.max(1.0)).sqrt();
        rows.push(SupTailRow { theta, sup_prob, point_prob, diff, stderr, pass: diff <= 3.0 * stderr });
    }
    Ok(SupTailReport {
        header: SUPINT_SURROGATE.to_string(),
        k,
        n: total,
        rows,
        sup_median: quantile(&sups, 0.5),
        sup_q90: quantile(&sups, 0.9),
    })
}
