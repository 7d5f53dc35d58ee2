//! Order-preserving coupled updates of two ensembles.
//!
//! Both ensembles are updated site by site from the exact single-site
//! conditional law by inverse-CDF with one shared uniform per site. That
//! law is stochastically increasing in every neighbour, boundary and
//! window edge, so a dominating pair stays dominating.
//!
//! At zero temperature the site law is a truncated normal. At positive
//! temperature it is inverted on a lattice whose cells are aligned to
//! multiples of a spacing shared by both ensembles, with a piecewise-linear
//! CDF between lattice points.

use super::{ChainConfig, EnsembleState, Hamiltonian, PinWindow};
use crate::error::{domain, Result};
use crate::rng::SimRng;
use crate::stats::truncated_normal_inv;
use rand::Rng;

/// Lattice cells per conditional standard deviation.
const CELLS_PER_SD: f64 = 32.0;

/// Two ensembles evolved with shared randomness.
#[derive(Debug, Clone)]
pub struct MonotonePair {
    pub hi: EnsembleState,
    pub lo: EnsembleState,
    h: Hamiltonian,
    cfg_hi: ChainConfig,
    cfg_lo: ChainConfig,
}

impl MonotonePair {
    pub fn new(
        hi: EnsembleState,
        lo: EnsembleState,
        h: Hamiltonian,
        cfg_hi: ChainConfig,
        cfg_lo: ChainConfig,
    ) -> Result<Self> {
        check_dominates(&hi, &lo)?;
        check_pins_ordered(&cfg_hi.pins, &cfg_lo.pins)?;
        if cfg_hi.sup_bound != cfg_lo.sup_bound || cfg_hi.rate != cfg_lo.rate {
            return domain("coupled chains need the same sup bound and rate");
        }
        Ok(Self { hi, lo, h, cfg_hi, cfg_lo })
    }

    pub fn sweep(&mut self, rng: &mut SimRng) -> Result<()> {
        let grid = self.hi.grid().clone();
        let x = grid.points();
        let w = grid.trapezoid_weights();
        let pins_hi = pin_lookup(&self.cfg_hi.pins, &grid)?;
        let pins_lo = pin_lookup(&self.cfg_lo.pins, &grid)?;
        let m_bound = self.cfg_hi.sup_bound;
        let rate = self.cfg_hi.rate;
        for i in 0..self.hi.k() {
            for j in 1..grid.len() - 1 {
                let u: f64 = rng.random();
                let dl = x[j] - x[j - 1];
                let dr = x[j + 1] - x[j];
                let sd = (rate * dl * dr / (dl + dr)).sqrt();
                let window = |pins: &[(usize, f64, f64)]| {
                    let mut lo = -m_bound;
                    let mut hi = m_bound;
                    if i == 0 {
                        if let Some(&(_, a, b)) = pins.iter().find(|p| p.0 == j) {
                            lo = lo.max(a);
                            hi = hi.min(b);
                        }
                    }
                    (lo, hi)
                };
                let site = |state: &EnsembleState, (lo, hi): (f64, f64)| {
                    let c = state.curve(i);
                    SiteLaw {
                        mean: (dr * c[j - 1] + dl * c[j + 1]) / (dl + dr),
                        sd,
                        above: state.above(i).map(|a| a[j]),
                        below: state.below(i).map(|b| b[j]),
                        weight: w[j],
                        lo,
                        hi,
                    }
                };
                let (y_hi, y_lo) =
                    coupled_draw(&self.h, &site(&self.hi, window(&pins_hi)), &site(&self.lo, window(&pins_lo)), u)?;
                self.hi.curves_mut()[i][j] = y_hi;
                self.lo.curves_mut()[i][j] = y_lo;
            }
        }
        Ok(())
    }

    pub fn dominates(&self) -> bool {
        self.hi
            .curves()
            .iter()
            .zip(self.lo.curves())
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x >= y))
    }
}

fn pin_lookup(pins: &[PinWindow], grid: &crate::brownian::Grid) -> Result<Vec<(usize, f64, f64)>> {
    pins.iter()
        .map(|p| match grid.index_of(p.x) {
            Some(i) if i > 0 && i + 1 < grid.len() => Ok((i, p.lo(), p.hi())),
            _ => domain(format!("pin at x = {} is not an interior grid point", p.x)),
        })
        .collect()
}

/// Single-site conditional law: a normal from the two grid neighbours,
/// reweighted by the interaction with the curves above and below and
/// restricted to `[lo, hi]`.
struct SiteLaw {
    mean: f64,
    sd: f64,
    above: Option<f64>,
    below: Option<f64>,
    weight: f64,
    lo: f64,
    hi: f64,
}

/// Log-density drop that marks the edge of the numerical support.
const LEVEL_DROP: f64 = 36.0;

impl SiteLaw {
    fn log_density(&self, h: &Hamiltonian, y: f64) -> f64 {
        let mut e = 0.0;
        if let Some(a) = self.above {
            e += h.site_energy(a, y);
        }
        if let Some(b) = self.below {
            e += h.site_energy(y, b);
        }
        let z = (y - self.mean) / self.sd;
        -0.5 * z * z - self.weight * e
    }

    /// Derivative of the log density; decreasing since the law is log-concave.
    fn slope(&self, h: &Hamiltonian, y: f64) -> f64 {
        let mut g = -(y - self.mean) / (self.sd * self.sd);
        if let Hamiltonian::Finite { t13, .. } = *h {
            if let Some(a) = self.above {
                g -= self.weight * t13 * h.site_energy(a, y);
            }
            if let Some(b) = self.below {
                g += self.weight * t13 * h.site_energy(y, b);
            }
        }
        g
    }

    /// Interval outside which the unrestricted density is below
    /// `exp(-LEVEL_DROP)` times its maximum.
    fn numerical_support(&self, h: &Hamiltonian) -> (f64, f64) {
        let positive = |y: f64| self.slope(h, y) > 0.0;
        let mode = bisect_boundary(self.mean, self.sd, positive);
        let floor = self.log_density(h, mode) - LEVEL_DROP;
        let right = bisect_boundary(mode, self.sd, |y| y <= mode || self.log_density(h, y) >= floor);
        let left = -bisect_boundary(-mode, self.sd, |y| -y >= mode || self.log_density(h, -y) >= floor);
        (left, right)
    }
}

/// For a predicate that is true then false along the real line, finds the
/// switch point, searching outward from `start` in steps of `scale`.
fn bisect_boundary(start: f64, scale: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi);
    let mut step = scale;
    if pred(start) {
        lo = start;
        hi = start + step;
        while pred(hi) {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        hi = start;
        lo = start - step;
        while !pred(lo) {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse-CDF draws for the two coupled sites from one uniform.
fn coupled_draw(h: &Hamiltonian, hi_site: &SiteLaw, lo_site: &SiteLaw, u: f64) -> Result<(f64, f64)> {
    match *h {
        Hamiltonian::Zero => {
            let draw = |s: &SiteLaw| {
                let lo = s.below.map_or(s.lo, |b| s.lo.max(b));
                let hi = s.above.map_or(s.hi, |a| s.hi.min(a));
                if !(lo < hi) {
                    return domain("site has an empty admissible interval");
                }
                Ok(truncated_normal_inv(s.mean, s.sd, lo, hi, u))
            };
            Ok((draw(hi_site)?, draw(lo_site)?))
        }
        Hamiltonian::Finite { .. } => {
            // One shared range and lattice for both sites keeps the cell
            // masses in likelihood-ratio order.
            let (l1, r1) = hi_site.numerical_support(h);
            let (l2, r2) = lo_site.numerical_support(h);
            let (left, right) = (l1.min(l2), r1.max(r2));
            let draw = |s: &SiteLaw| {
                let lo = s.lo.max(left.min(s.hi - s.sd));
                let hi = s.hi.min(right.max(lo + s.sd));
                if !(lo < hi) {
                    return domain("site has an empty admissible interval");
                }
                Ok(lattice_inverse(|y| s.log_density(h, y), s.sd / CELLS_PER_SD, lo, hi, u))
            };
            Ok((draw(hi_site)?, draw(lo_site)?))
        }
    }
}

/// Inverse of the piecewise-linear CDF whose cell masses are the density
/// at aligned cell midpoints times the cell's overlap with `[lo, hi]`.
fn lattice_inverse(log_density: impl Fn(f64) -> f64, delta: f64, lo: f64, hi: f64, u: f64) -> f64 {
    let k0 = (lo / delta).floor() as i64;
    let k1 = (hi / delta).ceil() as i64;
    let cells: Vec<(f64, f64, f64)> = (k0..k1)
        .filter_map(|k| {
            let (l, r) = (k as f64 * delta, (k + 1) as f64 * delta);
            let (cl, cr) = (l.max(lo), r.min(hi));
            (cr > cl).then(|| (cl, cr, log_density(l + 0.5 * delta)))
        })
        .collect();
    let top = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return lo + u * (hi - lo);
    }
    let masses: Vec<f64> = cells.iter().map(|&(l, r, ld)| (ld - top).exp() * (r - l)).collect();
    let total: f64 = masses.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (&(l, r, _), &m) in cells.iter().zip(&masses) {
        if acc + m >= target && m > 0.0 {
            return (l + (target - acc) / m * (r - l)).clamp(l, r);
        }
        acc += m;
    }
    hi
}

fn check_dominates(hi: &EnsembleState, lo: &EnsembleState) -> Result<()> {
    if hi.grid() != lo.grid() || hi.k() != lo.k() {
        return domain("coupled ensembles need the same grid and curve count");
    }
    let ge = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x >= y);
    if !hi.curves().iter().zip(lo.curves()).all(|(a, b)| ge(a, b)) {
        return domain("upper ensemble does not dominate the lower one");
    }
    let lower_ok = match (hi.lower(), lo.lower()) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => ge(a, b),
    };
    let upper_ok = match (hi.upper(), lo.upper()) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(a), Some(b)) => ge(a, b),
    };
    if !lower_ok || !upper_ok {
        return domain("boundaries are not ordered");
    }
    Ok(())
}

fn check_pins_ordered(hi: &[PinWindow], lo: &[PinWindow]) -> Result<()> {
    if hi.len() != lo.len() {
        return domain("coupled chains need pins at the same locations");
    }
    for (a, b) in hi.iter().zip(lo) {
        if a.x != b.x || a.lo() < b.lo() || a.hi() < b.hi() {
            return domain("pin windows are not ordered");
        }
    }
    Ok(())
}

/// One coupled sweep with the same configuration for both ensembles.
pub fn monotone_gibbs_sweep_pair(
    hi: EnsembleState,
    lo: EnsembleState,
    h: &Hamiltonian,
    cfg: &ChainConfig,
    rng: &mut SimRng,
) -> Result<(EnsembleState, EnsembleState)> {
    monotone_gibbs_sweep_pair_pinned(hi, lo, h, cfg, cfg, rng)
}

/// One coupled sweep where the two ensembles carry their own pin windows.
pub fn monotone_gibbs_sweep_pair_pinned(
    hi: EnsembleState,
    lo: EnsembleState,
    h: &Hamiltonian,
    cfg_hi: &ChainConfig,
    cfg_lo: &ChainConfig,
    rng: &mut SimRng,
) -> Result<(EnsembleState, EnsembleState)> {
    let mut pair = MonotonePair::new(hi, lo, *h, cfg_hi.clone(), cfg_lo.clone())?;
    pair.sweep(rng)?;
    Ok((pair.hi, pair.lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::{Grid, SampledPath};
    use crate::stats::{ks_one_sample, norm_cdf};
    use rand::SeedableRng;

    fn flat_pair(g: &Grid, shift: f64) -> (EnsembleState, EnsembleState) {
        let mk = |s: f64| {
            EnsembleState::new(
                g.clone(),
                vec![vec![2.0 + s; g.len()], vec![0.0 + s; g.len()]],
                Some(SampledPath::from_fn(g, |_| -2.0 + s)),
                None,
            )
            .unwrap()
        };
        (mk(0.0), mk(-shift))
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let g = Grid::uniform(0.0, 1.0, 0.1).unwrap();
        let (a, _) = flat_pair(&g, 1.0);
        let cfg = ChainConfig::new(50.0).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        for h in [Hamiltonian::Zero, Hamiltonian::finite(1.0).unwrap()] {
            let (x, y) = monotone_gibbs_sweep_pair(a.clone(), a.clone(), &h, &cfg, &mut rng).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn order_preserved_both_temperatures() {
        let g = Grid::uniform(0.0, 2.0, 0.1).unwrap();
        let (a, b) = flat_pair(&g, 1.0);
        let cfg = ChainConfig::new(50.0).unwrap();
        for h in [Hamiltonian::Zero, Hamiltonian::finite(2.0).unwrap()] {
            let mut pair = MonotonePair::new(a.clone(), b.clone(), h, cfg.clone(), cfg.clone()).unwrap();
            let mut rng = SimRng::seed_from_u64(5);
            for _ in 0..300 {
                pair.sweep(&mut rng).unwrap();
                assert!(pair.dominates());
            }
        }
    }

    #[test]
    fn unordered_input_rejected() {
        let g = Grid::uniform(0.0, 1.0, 0.1).unwrap();
        let (a, b) = flat_pair(&g, 1.0);
        let cfg = ChainConfig::new(50.0).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        assert!(monotone_gibbs_sweep_pair(b, a, &Hamiltonian::Zero, &cfg, &mut rng).is_err());
    }

    #[test]
    fn heat_bath_free_midpoint_law() {
        // A single free curve: the site sampler must reproduce the bridge.
        let g = Grid::uniform(0.0, 1.0, 0.125).unwrap();
        let st = EnsembleState::new(g.clone(), vec![vec![0.0; g.len()]], None, None).unwrap();
        let cfg = ChainConfig::new(50.0).unwrap();
        let h = Hamiltonian::finite(1.0).unwrap();
        let mut pair = MonotonePair::new(st.clone(), st, h, cfg.clone(), cfg).unwrap();
        let mut rng = SimRng::seed_from_u64(2);
        let mid = g.index_of(0.5).unwrap();
        let mut xs = Vec::new();
        for s in 0..21_000 {
            pair.sweep(&mut rng).unwrap();
            if s >= 1000 && s % 2 == 0 {
                xs.push(pair.hi.curve(0)[mid]);
            }
        }
        let d = ks_one_sample(&xs, |v| norm_cdf(v / 0.5f64.sqrt()));
        assert!(d < 0.03, "KS {d}");
    }
}
