//! Experiment registry, reproducible runs and the verification suites.
//!
//! Every run is a pure function of (experiment, parameters, seed): worker
//! count changes only speed, never output bytes.

mod experiments;
mod params;
mod registry;
mod report;

pub use params::{read_config_file, schema_text, Kind, ParamSpec, Params};
pub use registry::{find, Experiment, RunFn, EXPERIMENTS};
pub use report::{
    param_string, read_rows, row_passes, write_plot, write_rows, ExperimentResult, PlotData, Row, RunManifest, Z_BAND,
};

use crate::error::{Error, Result};
use crate::parallel::with_replicas;
use crate::rng::RngHandle;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "KPZ_TAILS_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: String,
    pub params: Params,
    pub seed: u64,
    /// Worker threads.
    pub replicas: usize,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Reduced sample sizes.
    Quick,
    /// Acceptance-grade sample sizes.
    Full,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Quick => "quick",
            Suite::Full => "full",
        }
    }

    /// Experiments of the suite with their parameter overrides.
    pub fn entries(self) -> Vec<(&'static str, Vec<(&'static str, &'static str)>)> {
        let quick = self == Suite::Quick;
        let pick = |q: &'static str, f: &'static str| if quick { q } else { f };
        vec![
            ("recursion", vec![]),
            ("geometry", vec![("theta", "1"), ("a", "0.5"), ("b", "-0.9")]),
            ("convolve", vec![]),
            ("avoid", vec![("z", pick("1.5,3,4", "1.5,3,4")), ("n", pick("200000", "1000000"))]),
            ("tail1", vec![("theta", "4,9,16"), ("n", pick("50000", "200000"))]),
            ("tail2", vec![("points", "0:0:1,1:1:1,0.5:-0.9:4"), ("n", pick("50000", "200000"))]),
            ("shape", vec![("theta", "16,36"), ("sweeps", pick("8000", "20000"))]),
            ("fkgbk", vec![("k", "2"), ("n", pick("20000", "100000"))]),
            ("supint", vec![("k", "2"), ("n", pick("4000", "20000"))]),
        ]
    }
}

fn to_map(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_outputs(stem: &str, result: &ExperimentResult, out_dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    let csv = out_dir.join(format!("{stem}.csv"));
    write_rows(&result.rows, create(&csv)?)?;
    outputs.push(csv.display().to_string());
    for plot in &result.plots {
        let path = out_dir.join(format!("{stem}_{}.csv", plot.name));
        write_plot(plot, create(&path)?)?;
        outputs.push(path.display().to_string());
    }
    if let Some(json) = &result.json {
        let path = out_dir.join(format!("{stem}.json"));
        serde_json::to_writer_pretty(create(&path)?, json)?;
        outputs.push(path.display().to_string());
    }
    Ok(outputs)
}

fn write_manifest(stem: &str, manifest: &RunManifest, out_dir: &Path) -> Result<()> {
    serde_json::to_writer_pretty(create(&out_dir.join(format!("{stem}.manifest.json")))?, manifest)?;
    Ok(())
}

/// Runs one experiment and writes `<name>.csv`, plot CSVs, an optional
/// `<name>.json` and `<name>.manifest.json` under `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<(ExperimentResult, RunManifest)> {
    let exp = find(&cfg.experiment).ok_or_else(|| Error::Usage(format!("unknown experiment '{}'", cfg.experiment)))?;
    let start = Instant::now();
    let mut result = with_replicas(cfg.replicas, || (exp.run)(&cfg.params, &RngHandle::new(cfg.seed)))?;
    result.wall_time_s = start.elapsed().as_secs_f64();
    let outputs = write_outputs(exp.name, &result, &cfg.out_dir)?;
    let manifest = RunManifest {
        experiment: exp.name.to_string(),
        params: cfg.params.as_map().clone(),
        seed: cfg.seed,
        grid_step: cfg.params.get("grid_step").and_then(|s| s.parse().ok()),
        method: cfg.params.get("method").map(str::to_string),
        replicas: cfg.replicas,
        outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: result.wall_time_s,
    };
    write_manifest(exp.name, &manifest, &cfg.out_dir)?;
    Ok((result, manifest))
}

/// Runs every experiment of `suite`, experiment `i` on stream `i + 1` of
/// `seed`, and writes the merged `verify_<suite>.csv` with its manifest.
pub fn verify(suite: Suite, seed: u64, replicas: usize, out_dir: &Path) -> Result<(ExperimentResult, RunManifest)> {
    let start = Instant::now();
    let mut merged = ExperimentResult::default();
    for (i, (name, overrides)) in suite.entries().into_iter().enumerate() {
        let exp = find(name).expect("suite names are registered");
        let params = Params::resolve(exp.params, &Default::default(), &to_map(&overrides))?;
        let rng = RngHandle::with_stream(seed, i as u64 + 1);
        let part = with_replicas(replicas, || (exp.run)(&params, &rng))?;
        merged.extend(part);
    }
    merged.wall_time_s = start.elapsed().as_secs_f64();
    let stem = format!("verify_{}", suite.name());
    let outputs = write_outputs(&stem, &merged, out_dir)?;
    let manifest = RunManifest {
        experiment: "verify".to_string(),
        params: BTreeMap::from([("suite".to_string(), suite.name().to_string())]),
        seed,
        grid_step: None,
        method: None,
        replicas,
        outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: merged.wall_time_s,
    };
    write_manifest(&stem, &manifest, out_dir)?;
    Ok((merged, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_writes_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let exp = find("recursion").unwrap();
        let cfg = RunConfig {
            experiment: "recursion".into(),
            params: Params::resolve(exp.params, &Default::default(), &[("n_max".into(), "5".into())]).unwrap(),
            seed: 3,
            replicas: 1,
            out_dir: dir.path().to_path_buf(),
        };
        let (res, manifest) = run(&cfg).unwrap();
        assert!(res.all_pass());
        assert_eq!(res.rows.len(), 12);
        let rows = read_rows(&dir.path().join("recursion.csv")).unwrap();
        assert_eq!(rows, res.rows);
        let text = fs::read_to_string(dir.path().join("recursion.manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.seed, manifest.seed);
        assert_eq!(back.params["n_max"], "5");
    }

    #[test]
    fn unknown_experiment_is_usage_error() {
        let cfg = RunConfig {
            experiment: "nope".into(),
            params: Params::default(),
            seed: 1,
            replicas: 1,
            out_dir: PathBuf::from("unused"),
        };
        assert!(matches!(run(&cfg), Err(Error::Usage(_))));
    }
}
