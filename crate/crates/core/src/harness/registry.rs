//! The experiment registry.

use super::experiments as ex;
use super::params::{Kind, ParamSpec, Params};
use super::report::ExperimentResult;
use crate::error::Result;
use crate::rng::RngHandle;
use serde::Serialize;

pub type RunFn = fn(&Params, &RngHandle) -> Result<ExperimentResult>;

#[derive(Clone, Copy, Serialize)]
pub struct Experiment {
    pub name: &'static str,
    pub doc: &'static str,
    /// The statement the experiment confronts.
    pub anchor: &'static str,
    pub params: &'static [ParamSpec],
    #[serde(skip)]
    pub run: RunFn,
}

const fn spec(key: &'static str, kind: Kind, default: &'static str, doc: &'static str) -> ParamSpec {
    ParamSpec { key, kind, default, doc }
}

const METHOD: ParamSpec = spec("method", Kind::Text, "tilted", "tilted or naive");

const AVOID: &[ParamSpec] = &[
    spec("z", Kind::FloatList, "1.5", "half-lengths of the symmetric intervals"),
    spec("n", Kind::Int, "100000", "samples per interval"),
    spec("grid_step", Kind::Float, "0.01", "grid spacing"),
    spec("mesh_epsilon", Kind::Float, "1.2", "target spacing of the mesh lower bound"),
    METHOD,
];

const TAIL1: &[ParamSpec] = &[
    spec("theta", Kind::FloatList, "4,9,16", "tail levels"),
    spec("n", Kind::Int, "200000", "samples per level and per ratio term"),
    spec("grid_step", Kind::Float, "0.01", "grid spacing"),
    spec("margin", Kind::Float, "1", "endpoint height above -x^2"),
    spec("tilt", Kind::Float, "1", "proposal tilt strength (0 disables)"),
    spec("particles", Kind::Int, "2048", "particles per resampling replicate"),
    spec("envelope_c", Kind::Float, "3", "constant multiplying the error envelope"),
    METHOD,
];

const TAIL2: &[ParamSpec] = &[
    spec("points", Kind::TripleList, "0:0:1,1:1:1,0.5:-0.9:4", "a:b:theta parameter points"),
    spec("n", Kind::Int, "200000", "samples per point and per ratio term"),
    spec("grid_step", Kind::Float, "0.01", "grid spacing"),
    spec("margin", Kind::Float, "1", "endpoint height above -x^2"),
    spec("tilt", Kind::Float, "1", "proposal tilt strength (0 disables)"),
    spec("particles", Kind::Int, "2048", "particles per resampling replicate"),
    spec("envelope_c", Kind::Float, "3", "constant multiplying the error envelope"),
    METHOD,
];

const SHAPE: &[ParamSpec] = &[
    spec("theta", Kind::FloatList, "16,36", "pinned heights at the origin (each >= 4)"),
    spec("sweeps", Kind::Int, "20000", "sweeps per chain"),
    spec("grid_step", Kind::Float, "0.05", "grid spacing"),
    spec("chains", Kind::Int, "4", "independent chains"),
    spec("pin_half_width", Kind::Float, "1", "half width of the window at the origin"),
    spec("endpoint_factor", Kind::Float, "2", "endpoints at +-factor*sqrt(theta)"),
];

const FKGBK: &[ParamSpec] = &[
    spec("k", Kind::Int, "2", "number of curves (>= 2)"),
    spec("levels", Kind::FloatList, "0,0.5,1", "event thresholds"),
    spec("n", Kind::Int, "20000", "ensemble samples"),
    spec("grid_step", Kind::Float, "0.01", "grid spacing"),
];

const SUPINT: &[ParamSpec] = &[
    spec("theta", Kind::FloatList, "0.5,1,2,3", "tail levels"),
    spec("k", Kind::Int, "2", "curves in the surrogate ensemble"),
    spec("n", Kind::Int, "4000", "chain samples, split over four chains"),
];

const CONVOLVE: &[ParamSpec] = &[
    spec("t", Kind::Float, "1", "time parameter"),
    spec("half_width", Kind::Float, "10", "integration range [-w, w]"),
    spec("grid_step", Kind::Float, "0.01", "grid spacing"),
];

const GEOMETRY: &[ParamSpec] = &[
    spec("theta", Kind::Float, "1", "scale"),
    spec("a", Kind::Float, "0.5", "left height over theta"),
    spec("b", Kind::Float, "-0.9", "right height over theta"),
];

const RECURSION: &[ParamSpec] = &[spec("n_max", Kind::Int, "20", "last step checked")];

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "avoid",
        doc: "probability that a bridge stays above -x^2, against analytic lower and upper bounds",
        anchor: "parabola avoidance sandwich",
        params: AVOID,
        run: ex::avoid,
    },
    Experiment {
        name: "tail1",
        doc: "one-point upper tail by tilted resampling, against (4/3) theta^{3/2} +- C theta^{3/4}",
        anchor: "one-point upper tail rate",
        params: TAIL1,
        run: ex::tail1,
    },
    Experiment {
        name: "tail2",
        doc: "two-point upper tail of the pinned surrogate, against the convex-hull rate",
        anchor: "two-point upper tail rate",
        params: TAIL2,
        run: ex::tail2,
    },
    Experiment {
        name: "shape",
        doc: "shape of a bridge pinned high at the origin, against the tent and the parabola",
        anchor: "one-point limit shape and outer fluctuations",
        params: SHAPE,
        run: ex::shape,
    },
    Experiment {
        name: "fkgbk",
        doc: "positive association and BK-type domination on non-intersecting bridges",
        anchor: "FKG and BK inequalities",
        params: FKGBK,
        run: ex::fkgbk,
    },
    Experiment {
        name: "supint",
        doc: "tail of the sup over [-1, 1] against 4 theta times a one-point tail",
        anchor: "sup-over-interval tail bound",
        params: SUPINT,
        run: ex::supint,
    },
    Experiment {
        name: "convolve",
        doc: "value from general initial data and admissibility checks",
        anchor: "convolution formula and initial-data hypotheses",
        params: CONVOLVE,
        run: ex::convolve,
    },
    Experiment {
        name: "geometry",
        doc: "convex hull, case label and rate of a two-point spec, with exact identities",
        anchor: "two-point convex hull geometry",
        params: GEOMETRY,
        run: ex::geometry,
    },
    Experiment {
        name: "recursion",
        doc: "lower-bound recursion against its closed form",
        anchor: "tail lower-bound recursion",
        params: RECURSION,
        run: ex::recursion,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_defaults_parse() {
        assert_eq!(EXPERIMENTS.len(), 9);
        for (i, e) in EXPERIMENTS.iter().enumerate() {
            assert!(EXPERIMENTS[i + 1..].iter().all(|f| f.name != e.name));
            assert!(!e.anchor.is_empty() && !e.doc.is_empty());
            Params::resolve(e.params, &Default::default(), &[]).unwrap();
        }
    }
}
