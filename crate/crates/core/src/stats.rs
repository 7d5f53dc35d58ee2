//! Summary statistics, normal-distribution helpers and goodness-of-fit tools.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Running first and second moments; merges are exact sums so reductions
/// in a fixed order are reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Joint moments of a pair `(x, y)`, enough for a delta-method ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    pub x: Moments,
    pub y: Moments,
    pub sum_xy: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.x.push(x);
        self.y.push(y);
        self.sum_xy += x * y;
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            x: self.x.merge(other.x),
            y: self.y.merge(other.y),
            sum_xy: self.sum_xy + other.sum_xy,
        }
    }

    pub fn covariance(&self) -> f64 {
        let n = self.x.n as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        (self.sum_xy - self.x.sum * self.y.sum / n) / (n - 1.0)
    }

    /// `ln(mean x / mean y)` with its delta-method standard error.
    pub fn log_ratio(&self) -> (f64, f64) {
        let n = self.x.n as f64;
        let (mx, my) = (self.x.mean(), self.y.mean());
        let log_r = mx.ln() - my.ln();
        let rel = self.x.variance() / (mx * mx) + self.y.variance() / (my * my)
            - 2.0 * self.covariance() / (mx * my);
        (log_r, (rel.max(0.0) / n).sqrt())
    }
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `P(N(0,1) >= x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln P(N(0,1) >= x)`, accurate far into the upper tail.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        return norm_sf(x).ln();
    }
    // Asymptotic Mills-ratio series.
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // One Newton step against the accurate CDF.
    let (err, dens) = if x > 0.0 { (norm_sf(x) - (1.0 - p), norm_pdf(x)) } else { (p - norm_cdf(x), norm_pdf(x)) };
    if dens > 0.0 {
        x + err / dens
    } else {
        x
    }
}

/// Inverse-CDF draw from `N(mean, sd^2)` truncated to `(lo, hi)`.
///
/// The map `u -> value` is nondecreasing, and for fixed `u` the value is
/// nondecreasing in `mean`, `lo` and `hi`; monotone couplings rely on this.
pub fn truncated_normal_inv(mean: f64, sd: f64, lo: f64, hi: f64, u: f64) -> f64 {
    debug_assert!(lo < hi);
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let z = if a >= 0.0 {
        std_truncated_upper(a, b, u)
    } else if b <= 0.0 {
        -std_truncated_upper(-b, -a, 1.0 - u)
    } else {
        let ca = norm_cdf(a);
        let cb = norm_cdf(b);
        norm_quantile(ca + u * (cb - ca))
    };
    (mean + sd * z).clamp(lo, hi)
}

// Truncated standard normal on [a, b] with 0 <= a < b, using survival
// functions so nothing cancels in the tail.
fn std_truncated_upper(a: f64, b: f64, u: f64) -> f64 {
    let sa = norm_sf(a);
    if sa > 1e-300 {
        let sb = norm_sf(b);
        let target = sa - u * (sa - sb);
        if target > 0.0 {
            return (-norm_quantile(target)).clamp(a, b);
        }
    }
    // Far tail: the truncated law is close to a + Exp(a).
    let span = (b - a) * a;
    let tail_mass = if span.is_finite() { -(-span).exp_m1() } else { 1.0 };
    (a - (-u * tail_mass).ln_1p() / a).min(b)
}

/// Gaussian upper tail for `N(0, var)` beyond `x`.
pub fn gaussian_sf(x: f64, var: f64) -> f64 {
    norm_sf(x / var.sqrt())
}

/// One-sided 95% Poisson upper bound on the mean count given `k` events;
/// equals the rule of three (about 2.996) when `k = 0`.
pub fn poisson_upper_95(k: u64) -> f64 {
    let dist = ChiSquared::new(2.0 * (k as f64 + 1.0)).expect("positive dof");
    0.5 * dist.inverse_cdf(0.95)
}

/// Linear-interpolated quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Two-sample KS rejection threshold at level `alpha`.
pub fn ks_two_sample_critical(na: usize, nb: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width at level `alpha`.
pub fn dkw_bound(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Effective sample size from the initial positive sequence of autocorrelations.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return n as f64;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| {
        series[..n - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (n as f64 * c0)
    };
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    n as f64 / tau
}

/// Split-R-hat over several chains of equal length.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[h..2 * h]]
        })
        .collect();
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let between = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let within = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if within == 0.0 {
        return 1.0;
    }
    (((n - 1.0) / n * within + between / n) / within).sqrt()
}

/// Least-squares fit of `ln p = ln C - c K^2`; returns `(C, c)`.
pub fn fit_gaussian_decay(ks: &[f64], log_ps: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ks.iter().map(|k| k * k).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = log_ps.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(log_ps).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ((my - slope * mx).exp(), -slope)
}
