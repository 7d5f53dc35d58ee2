//! Result rows, CSV output and run manifests.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Band half-width, in standard errors, used by every row.
pub const Z_BAND: f64 = 3.0;

/// One parameter point of an experiment.
///
/// `log_p` holds the row's estimate: a natural-log probability for
/// estimator rows, or the statistic named by `stat=` in `params` otherwise.
/// The row passes when the band `[log_p - z stderr, log_p + z stderr]`
/// meets `[analytic_lo, analytic_hi]`; with infinite `stderr_log` (no
/// successes) the band is `[-inf, ln(3/n)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub params: String,
    pub log_p: f64,
    pub stderr_log: f64,
    pub n: u64,
    pub analytic_lo: f64,
    pub analytic_hi: f64,
    pub z: f64,
    pub pass_flag: bool,
}

/// The pass rule documented on [`Row`].
pub fn row_passes(log_p: f64, stderr_log: f64, n: u64, analytic_lo: f64, analytic_hi: f64, z: f64) -> bool {
    let (lo, hi) = if stderr_log.is_finite() {
        (log_p - z * stderr_log, log_p + z * stderr_log)
    } else {
        (f64::NEG_INFINITY, (3.0 / n.max(1) as f64).ln())
    };
    analytic_lo <= hi && lo <= analytic_hi
}

impl Row {
    pub fn new(experiment: &str, params: String, log_p: f64, stderr_log: f64, n: u64, lo: f64, hi: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params,
            log_p,
            stderr_log,
            n,
            analytic_lo: lo,
            analytic_hi: hi,
            z: Z_BAND,
            pass_flag: row_passes(log_p, stderr_log, n, lo, hi, Z_BAND),
        }
    }

    /// A row whose value is known exactly.
    pub fn exact(experiment: &str, params: String, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(experiment, params, value, 0.0, 1, lo, hi)
    }

    /// Re-derives the pass flag from the row's own numbers.
    pub fn recomputed_pass(&self) -> bool {
        row_passes(self.log_p, self.stderr_log, self.n, self.analytic_lo, self.analytic_hi, self.z)
    }
}

/// `key=value` pairs joined with `;`.
pub fn param_string(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Columns `x, y, band_lo, band_hi` for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    pub plots: Vec<PlotData>,
    /// Structured output printed alongside the table, if any.
    pub json: Option<serde_json::Value>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass_flag)
    }

    pub fn extend(&mut self, other: ExperimentResult) {
        self.rows.extend(other.rows);
        self.plots.extend(other.plots);
        self.warnings.extend(other.warnings);
    }
}

pub fn write_rows(rows: &[Row], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(std::io::Error::from)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<Row>, _>>().map_err(std::io::Error::from)?;
    Ok(rows)
}

pub fn write_plot(plot: &PlotData, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "band_lo", "band_hi"]).map_err(std::io::Error::from)?;
    for i in 0..plot.x.len() {
        let rec = [plot.x[i], plot.y[i], plot.band_lo[i], plot.band_hi[i]].map(|v| v.to_string());
        w.write_record(&rec).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub grid_step: Option<f64>,
    pub method: Option<String>,
    pub replicas: usize,
    pub outputs: Vec<String>,
    pub version: String,
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule_cases() {
        assert!(row_passes(-5.0, 0.1, 100, -5.2, -4.0, 3.0));
        assert!(!row_passes(-5.0, 0.1, 100, -4.5, -4.0, 3.0));
        // No successes: only an upper edge of ln(3/n).
        assert!(row_passes(f64::NEG_INFINITY, f64::INFINITY, 1000, -10.0, 0.0, 3.0));
        assert!(!row_passes(f64::NEG_INFINITY, f64::INFINITY, 1000, -1.0, 0.0, 3.0));
        assert!(!row_passes(f64::NAN, 0.1, 10, -1.0, 1.0, 3.0));
    }

    #[test]
    fn csv_round_trip_keeps_infinities() {
        let rows = vec![
            Row::new("avoid", param_string(&[("z", "1.5".into())]), -1.25, 0.01, 1000, f64::NEG_INFINITY, 0.0),
            Row::new("avoid", "z=9".into(), f64::NEG_INFINITY, f64::INFINITY, 1000, -50.0, f64::INFINITY),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_rows(&rows, std::fs::File::create(&path).unwrap()).unwrap();
        let back = read_rows(&path).unwrap();
        assert_eq!(back, rows);
        assert!(back.iter().all(|r| r.pass_flag == r.recomputed_pass()));
    }
}
