use crate::stats::{poisson_upper_95, Moments, PairMoments};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Below this many successes a Gaussian error bar is not trusted and the
/// one-sided Poisson bound is reported instead.
pub const SUCCESS_FLOOR: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Tilted,
    Chain,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Tilted => "tilted",
            Method::Chain => "chain",
        })
    }
}

/// A log-probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub log_p: f64,
    /// Standard error of `log_p`; infinite only when `log_p` is `-inf`.
    pub stderr_log: f64,
    pub n: u64,
    pub method: Method,
    /// Samples that contributed a nonzero term.
    pub hits: u64,
    /// One-sided 95% upper bound on `log_p`.
    pub upper_log: f64,
}

impl TailEstimate {
    /// Plain proportion `hits / n`.
    pub fn from_counts(hits: u64, n: u64, method: Method) -> Self {
        assert!(n >= 1, "empty sample");
        let nf = n as f64;
        let upper_poisson = (poisson_upper_95(hits) / nf).min(1.0).ln();
        if hits == 0 {
            return Self {
                log_p: f64::NEG_INFINITY,
                stderr_log: f64::INFINITY,
                n,
                method,
                hits,
                upper_log: upper_poisson,
            };
        }
        let p = hits as f64 / nf;
        let stderr_log = ((1.0 - p) / (nf * p)).sqrt();
        let upper_log = if hits < SUCCESS_FLOOR {
            upper_poisson
        } else {
            p.ln() + 1.645 * stderr_log
        };
        Self { log_p: p.ln(), stderr_log, n, method, hits, upper_log }
    }

    /// Mean of nonnegative importance weights.
    pub fn from_weights(weights: &Moments, hits: u64, method: Method) -> Self {
        let n = weights.n;
        let mean = weights.mean();
        if hits == 0 || mean <= 0.0 {
            return Self {
                log_p: f64::NEG_INFINITY,
                stderr_log: f64::INFINITY,
                n,
                method,
                hits,
                upper_log: f64::NEG_INFINITY,
            };
        }
        let stderr_log = weights.stderr() / mean;
        Self {
            log_p: mean.ln(),
            stderr_log,
            n,
            method,
            hits,
            upper_log: mean.ln() + 1.645 * stderr_log,
        }
    }

    /// Ratio of two weighted means sharing their samples.
    pub fn from_ratio(pair: &PairMoments, hits: u64, method: Method) -> Self {
        let n = pair.x.n;
        if hits == 0 || pair.x.mean() <= 0.0 || pair.y.mean() <= 0.0 {
            return Self {
                log_p: f64::NEG_INFINITY,
                stderr_log: f64::INFINITY,
                n,
                method,
                hits,
                upper_log: f64::NEG_INFINITY,
            };
        }
        let (log_p, stderr_log) = pair.log_ratio();
        Self { log_p, stderr_log, n, method, hits, upper_log: log_p + 1.645 * stderr_log }
    }

    pub fn probability(&self) -> f64 {
        self.log_p.exp()
    }

    pub fn is_low_count(&self) -> bool {
        self.hits < SUCCESS_FLOOR
    }

    /// `log_p - z * stderr`, or `-inf` when there were no hits.
    pub fn lower_edge(&self, z: f64) -> f64 {
        if self.hits == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_p - z * self.stderr_log
        }
    }

    /// `log_p + z * stderr`; falls back to the Poisson bound for low counts.
    pub fn upper_edge(&self, z: f64) -> f64 {
        if self.is_low_count() && self.method == Method::Naive {
            self.upper_log.max(self.log_p + z * self.stderr_log.min(1e300))
        } else {
            self.log_p + z * self.stderr_log
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hits_reports_rule_of_three() {
        let e = TailEstimate::from_counts(0, 1_000_000, Method::Naive);
        assert_eq!(e.log_p, f64::NEG_INFINITY);
        assert!(e.stderr_log.is_infinite());
        assert!((e.upper_log - (2.995_732f64 / 1e6).ln()).abs() < 1e-5);
        assert_eq!(e.lower_edge(3.0), f64::NEG_INFINITY);
    }

    #[test]
    fn proportion_error_bar() {
        let e = TailEstimate::from_counts(500, 1000, Method::Naive);
        assert!((e.log_p - 0.5f64.ln()).abs() < 1e-15);
        assert!((e.stderr_log - (0.5f64 / 500.0).sqrt()).abs() < 1e-15);
        assert!(!e.is_low_count());
    }
}
