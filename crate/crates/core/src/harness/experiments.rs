//! Experiment bodies: each turns resolved parameters into result rows.

use super::params::Params;
use super::report::{param_string, ExperimentResult, PlotData, Row};
use crate::brownian::{Grid, SampledPath};
use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::estimators::{
    analytic_avoidance_lower_bound, analytic_avoidance_upper_bound, conditioned_shape, fkg_bk_report,
    general_data_value, hyp_check, mc_avoidance, mc_two_point, naive_one_point_tail, sup_interval_tail_check,
    tilted_one_point_tail, AvoidanceSpec, EnsembleParams, HypParams, LowerBoundVariant, ShapeConfig, TailConfig,
    TailReport,
};
use crate::geometry::{
    classify, fkg_tangent_pair, hull, lower_bound_recursion, lower_bound_recursion_closed, one_point_envelope,
    one_point_log_rate, separate_tents_rate, tangency_points, two_extreme_rate, two_point_envelope,
    two_point_log_rate, TwoPointSpec,
};
use crate::rng::RngHandle;
use serde_json::json;

fn method(p: &Params) -> Result<Method> {
    match p.text("method") {
        "tilted" => Ok(Method::Tilted),
        "naive" => Ok(Method::Naive),
        other => Err(Error::Usage(format!("--method: expected 'tilted' or 'naive', got '{other}'"))),
    }
}

fn tail_config(p: &Params) -> Result<TailConfig> {
    Ok(TailConfig {
        grid_step: p.float("grid_step")?,
        margin: p.float("margin")?,
        tilt: p.float("tilt")?,
        particles: p.int("particles")? as usize,
    })
}

fn estimate_row(experiment: &str, params: String, e: &TailEstimate, lo: f64, hi: f64) -> Row {
    Row::new(experiment, params, e.log_p, e.stderr_log, e.n, lo, hi)
}

fn collect_warnings(out: &mut ExperimentResult, label: &str, rep: &TailReport) {
    out.warnings.extend(rep.warnings.iter().map(|w| format!("{label}: {w}")));
}

pub fn avoid(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let (n, step, eps, m) = (p.int("n")?, p.float("grid_step")?, p.float("mesh_epsilon")?, method(p)?);
    let mut out = ExperimentResult::default();
    for (i, &z) in p.floats("z")?.iter().enumerate() {
        let spec = AvoidanceSpec::symmetric(z)?;
        let est = mc_avoidance(&spec, step, n, &rng.substream(i as u64), m)?;
        let closed = analytic_avoidance_lower_bound(-z, z, LowerBoundVariant::ClosedForm)?;
        let mesh = analytic_avoidance_lower_bound(-z, z, LowerBoundVariant::Mesh { epsilon: eps }).ok();
        let mut lo = f64::NEG_INFINITY;
        let mut lower = "none";
        if !closed.flagged {
            lo = closed.log_p;
            lower = "closed_form";
        }
        if let Some(b) = mesh {
            if b.log_p > lo {
                lo = b.log_p;
                lower = "mesh";
            }
        }
        let hi = analytic_avoidance_upper_bound(z)?;
        let params = param_string(&[
            ("z", z.to_string()),
            ("grid_step", step.to_string()),
            ("method", m.to_string()),
            ("lower", lower.to_string()),
        ]);
        out.rows.push(estimate_row("avoid", params, &est, lo, hi));
    }
    Ok(out)
}

pub fn tail1(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let (n, cfg, m, c) = (p.int("n")?, tail_config(p)?, method(p)?, p.float("envelope_c")?);
    let mut out = ExperimentResult::default();
    for (i, &theta) in p.floats("theta")?.iter().enumerate() {
        let r = rng.substream(i as u64);
        let rep = match m {
            Method::Naive => naive_one_point_tail(theta, n, &r, &cfg)?,
            _ => tilted_one_point_tail(theta, n, &r, &cfg)?,
        };
        collect_warnings(&mut out, &format!("theta={theta}"), &rep);
        let rate = one_point_log_rate(theta)?;
        let band = c * one_point_envelope(theta);
        let params = param_string(&[
            ("theta", theta.to_string()),
            ("grid_step", cfg.grid_step.to_string()),
            ("method", m.to_string()),
            ("envelope_c", c.to_string()),
        ]);
        out.rows.push(estimate_row("tail1", params, &rep.estimate, -rate - band, -rate + band));
    }
    Ok(out)
}

pub fn tail2(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let (n, cfg, m, c) = (p.int("n")?, tail_config(p)?, method(p)?, p.float("envelope_c")?);
    let mut out = ExperimentResult::default();
    for (i, &(a, b, theta)) in p.triples("points")?.iter().enumerate() {
        let spec = TwoPointSpec::new(theta, a, b)?;
        let rep = mc_two_point(&spec, n, &rng.substream(i as u64), m, &cfg)?;
        collect_warnings(&mut out, &format!("point={a}:{b}:{theta}"), &rep);
        let rate = two_point_log_rate(&spec);
        let band = c * two_point_envelope(theta);
        let params = param_string(&[
            ("a", a.to_string()),
            ("b", b.to_string()),
            ("theta", theta.to_string()),
            ("case", format!("{:?}", classify(&spec))),
            ("grid_step", cfg.grid_step.to_string()),
            ("method", m.to_string()),
            ("envelope_c", c.to_string()),
        ]);
        out.rows.push(estimate_row("tail2", params, &rep.estimate, -rate - band, -rate + band));
    }
    Ok(out)
}

pub fn shape(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let cfg = ShapeConfig {
        grid_step: p.float("grid_step")?,
        chains: p.int("chains")? as usize,
        pin_half_width: p.float("pin_half_width")?,
        endpoint_factor: p.float("endpoint_factor")?,
        ..ShapeConfig::default()
    };
    let sweeps = p.int("sweeps")? as usize;
    let mut out = ExperimentResult::default();
    let mut medians = Vec::new();
    for (i, &theta) in p.floats("theta")?.iter().enumerate() {
        let rep = conditioned_shape(theta, sweeps, &rng.substream(i as u64), &cfg)?;
        let label = |stat: &str| {
            param_string(&[("stat", stat.to_string()), ("theta", theta.to_string()), ("sweeps", sweeps.to_string())])
        };
        let samples = rep.inner_sup.len() as u64;
        let median = rep.inner_sup_median();
        medians.push((theta, median));
        out.rows.push(Row::exact("shape", label("inner_sup_median_log"), median.ln(), f64::NEG_INFINITY, f64::INFINITY));

        let outer_bound = 3.0 * theta.powf(0.25) * theta.ln();
        out.rows.push(Row::exact("shape", label("outer_abs_q95_log"), rep.outer_abs_q95.ln(), f64::NEG_INFINITY, outer_bound.ln()));

        let frac = rep.mid_drop_fraction(5.0);
        let hits = (frac * samples as f64).round();
        let se = if hits > 0.0 { ((1.0 - frac) / (samples as f64 * frac)).sqrt() } else { f64::INFINITY };
        out.rows.push(Row::new("shape", label("mid_drop5_log"), frac.ln(), se, samples, f64::NEG_INFINITY, 0.05f64.ln()));

        if rep.rhat > 1.1 {
            out.warnings.push(format!("theta={theta}: split R-hat {:.3} above 1.1", rep.rhat));
        }
        let column = |q: usize| rep.quantiles.iter().map(|row| row[q]).collect::<Vec<_>>();
        out.plots.push(PlotData {
            name: format!("shape_theta{theta}"),
            x: rep.x.clone(),
            y: column(2),
            band_lo: column(0),
            band_hi: column(4),
        });
    }
    for w in medians.windows(2) {
        let ((t0, m0), (t1, m1)) = (w[0], w[1]);
        let params = param_string(&[
            ("stat", "median_ratio_log".to_string()),
            ("theta", format!("{t0}:{t1}")),
            ("sweeps", sweeps.to_string()),
        ]);
        out.rows.push(Row::exact("shape", params, (m1 / m0).ln(), -(2f64.ln()), 2f64.ln()));
    }
    Ok(out)
}

pub fn fkgbk(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let k = p.int("k")? as usize;
    if k < 2 {
        return Err(Error::Usage("--k: the BK comparison needs at least two curves".into()));
    }
    let params = EnsembleParams { grid_step: p.float("grid_step")?, ..EnsembleParams::standard(k) };
    let rep = fkg_bk_report(&params, &p.floats("levels")?, p.int("n")?, rng)?;
    let mut out = ExperimentResult::default();
    for r in &rep.fkg {
        let label = param_string(&[
            ("stat", "fkg_cov".to_string()),
            ("k", k.to_string()),
            ("events", r.events.replace(", ", "|").replace(' ', "_")),
            ("level_a", r.level_a.to_string()),
            ("level_e", r.level_e.to_string()),
        ]);
        out.rows.push(Row::new("fkgbk", label, r.diff, r.stderr, rep.n, 0.0, f64::INFINITY));
    }
    for r in &rep.bk {
        let label = param_string(&[
            ("stat", "bk_diff".to_string()),
            ("k", k.to_string()),
            ("level_a", r.level_a.to_string()),
            ("level_c", r.level_c.to_string()),
            ("condition_hits", r.condition_hits.to_string()),
            ("flagged", u8::from(r.flagged).to_string()),
        ]);
        out.rows.push(Row::new("fkgbk", label, r.diff, r.stderr, rep.n, f64::NEG_INFINITY, 0.0));
        if r.flagged {
            out.warnings.push(format!("bk level_a={} level_c={}: only {} conditioning hits", r.level_a, r.level_c, r.condition_hits));
        }
    }
    Ok(out)
}

pub fn supint(p: &Params, rng: &RngHandle) -> Result<ExperimentResult> {
    let k = p.int("k")? as usize;
    let rep = sup_interval_tail_check(&p.floats("theta")?, k, p.int("n")?, rng)?;
    let mut out = ExperimentResult::default();
    for r in &rep.rows {
        let label = param_string(&[("stat", "sup_minus_bound".to_string()), ("theta", r.theta.to_string()), ("k", k.to_string())]);
        out.rows.push(Row::new("supint", label, r.diff, r.stderr, rep.n, f64::NEG_INFINITY, 0.0));
    }
    out.json = Some(json!({ "header": rep.header, "sup_median": rep.sup_median, "sup_q90": rep.sup_q90 }));
    Ok(out)
}

pub fn convolve(p: &Params, _rng: &RngHandle) -> Result<ExperimentResult> {
    let (t, half, step) = (p.float("t")?, p.float("half_width")?, p.float("grid_step")?);
    let grid = Grid::uniform(-half, half, step)?;
    let path = SampledPath::from_fn(&grid, |y| -y * y);
    let flat = SampledPath::from_fn(&grid, |_| 0.0);
    let value = general_data_value(&path, &flat, t)?;
    // Oracle: t^{-1/3} log int exp(-t^{1/3} y^2) dy = t^{-1/3} log sqrt(pi / t^{1/3}).
    let t13 = t.cbrt();
    let exact = (std::f64::consts::PI / t13).sqrt().ln() / t13;
    let mut out = ExperimentResult::default();
    let label = param_string(&[("stat", "gaussian_value".to_string()), ("t", t.to_string()), ("grid_step", step.to_string())]);
    out.rows.push(Row::exact("convolve", label, value, exact - 1e-3, exact + 1e-3));

    let cases: [(&str, SampledPath, HypParams, bool); 3] = [
        (
            "window",
            SampledPath::from_fn(&grid, |x| if x.abs() <= 1.0 + 1e-12 { 0.0 } else { f64::NEG_INFINITY }),
            HypParams::new(1.0, 1.0, 1.0, 2.0)?,
            true,
        ),
        ("quadratic", SampledPath::from_fn(&grid, |x| x * x), HypParams::new(2.0, 0.5, 1.0, 0.0)?, false),
        ("empty", SampledPath::from_fn(&grid, |_| f64::NEG_INFINITY), HypParams::new(1.0, 1.0, 1.0, 2.0)?, false),
    ];
    for (name, f, hp, expected) in cases {
        let got = if hyp_check(&f, &hp).pass { 1.0 } else { 0.0 };
        let want = if expected { 1.0 } else { 0.0 };
        let label = param_string(&[("stat", "hyp_pass".to_string()), ("case", name.to_string())]);
        out.rows.push(Row::exact("convolve", label, got, want, want));
    }
    Ok(out)
}

pub fn geometry(p: &Params, _rng: &RngHandle) -> Result<ExperimentResult> {
    let (theta, a, b) = (p.float("theta")?, p.float("a")?, p.float("b")?);
    let spec = TwoPointSpec::new(theta, a, b)?;
    let case = classify(&spec);
    let mut out = ExperimentResult::default();
    for scale in [0.25, 4.0] {
        let other = classify(&TwoPointSpec::new(theta * scale, a, b)?);
        let label = param_string(&[("stat", "classify_theta_invariant".to_string()), ("theta_scale", scale.to_string())]);
        out.rows.push(Row::exact("geometry", label, f64::from(u8::from(other == case)), 1.0, 1.0));
    }
    for z in [0.0, 0.25, 0.5, 0.75] {
        let pair = fkg_tangent_pair(z)?;
        let on_locus = TwoPointSpec::new(theta, pair.a, pair.b)?;
        let locus = (pair.a - pair.b).powi(2) - 8.0 * (pair.a + pair.b);
        let label = param_string(&[("stat", "tangent_locus_residual".to_string()), ("z", z.to_string())]);
        out.rows.push(Row::exact("geometry", label, locus, -1e-12, 1e-12));
        let gap = two_extreme_rate(&on_locus) - separate_tents_rate(&on_locus);
        let tol = 1e-12 * two_extreme_rate(&on_locus).abs().max(1.0);
        let label = param_string(&[("stat", "case_formula_gap".to_string()), ("z", z.to_string()), ("theta", theta.to_string())]);
        out.rows.push(Row::exact("geometry", label, gap, -tol, tol));
    }
    let (x_ell, x_r) = tangency_points(&spec);
    out.json = Some(json!({
        "theta": theta,
        "a": a,
        "b": b,
        "case_label": case,
        "tangency_points": [x_ell, x_r],
        "log_rate": two_point_log_rate(&spec),
        "hull": hull(&spec),
    }));
    Ok(out)
}

pub fn recursion(p: &Params, _rng: &RngHandle) -> Result<ExperimentResult> {
    let n_max = p.int("n_max")?;
    if n_max > 60 {
        return Err(Error::Usage("--n-max: at most 60".into()));
    }
    let mut out = ExperimentResult::default();
    for n in 0..=n_max as u32 {
        let (it, closed) = (lower_bound_recursion(n), lower_bound_recursion_closed(n));
        for (stat, got, want) in [("c_gap", it.c, closed.c), ("gamma_gap", it.gamma, closed.gamma)] {
            let label = param_string(&[("stat", stat.to_string()), ("n", n.to_string())]);
            out.rows.push(Row::exact("recursion", label, got - want, -1e-9, 1e-9));
        }
    }
    Ok(out)
}

