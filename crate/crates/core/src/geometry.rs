//! Tangent-line geometry over the parabola `-x^2`: the tent `tri`, the
//! convex hull of the parabola with two raised points, its case split,
//! and the closed-form tail exponents.
//!
//! Every rate is returned as a positive exponent: a probability of about
//! `exp(-rate)`. Error-term shapes live in separate envelope functions.

use crate::error::{domain, Result};
use serde::Serialize;

/// Relative tolerance for case-boundary comparisons.
pub const CASE_TOL: f64 = 1e-12;

/// The tent `-2 sqrt(theta) |x| + theta`.
pub fn tri(theta: f64, x: f64) -> f64 {
    -2.0 * theta.sqrt() * x.abs() + theta
}

/// Tangent line to `-x^2` at `x0`, as `(slope, intercept)`.
pub fn tangent_line(x0: f64) -> (f64, f64) {
    (-2.0 * x0, x0 * x0)
}

/// Hull of `-x^2` and the single point `(0, theta)`: the tent on
/// `[-sqrt(theta), sqrt(theta)]` and the parabola outside.
pub fn one_point_hull(theta: f64, x: f64) -> f64 {
    if x.abs() <= theta.sqrt() {
        tri(theta, x)
    } else {
        -x * x
    }
}

/// Heights `a theta` at `-sqrt(theta)` and `b theta` at `+sqrt(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPointSpec {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
}

impl TwoPointSpec {
    pub fn new(theta: f64, a: f64, b: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return domain(format!("theta = {theta} must be positive"));
        }
        if !(b > -1.0) || !(a >= b) || !a.is_finite() {
            return domain(format!("need a >= b > -1, got a = {a}, b = {b}"));
        }
        Ok(Self { theta, a, b })
    }

    fn root_theta(&self) -> f64 {
        self.theta.sqrt()
    }

    /// The chord through `(-sqrt(theta), a theta)` and `(sqrt(theta), b theta)`.
    pub fn chord(&self, x: f64) -> f64 {
        let s = self.root_theta();
        0.5 * (self.b - self.a) * s * (x + s) + self.a * self.theta
    }

    /// Where the chord meets `-x^2`, in units of `sqrt(theta)`, ascending.
    /// `None` when the chord stays above the parabola.
    pub fn chord_roots_scaled(&self) -> Option<(f64, f64)> {
        // x^2 + (b - a)/2 x + (a + b)/2 = 0
        let p = 0.5 * (self.b - self.a);
        let q = 0.5 * (self.a + self.b);
        let disc = p * p - 4.0 * q;
        if disc < 0.0 {
            return None;
        }
        let r = disc.sqrt();
        Some((0.5 * (-p - r), 0.5 * (-p + r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    /// Both raised points are extreme points of the hull.
    TwoExtreme,
    /// Each raised point carries its own tent; the hull is linear on two
    /// disjoint intervals.
    InfinitelyMany,
    /// Only the left (higher) point is extreme.
    OneExtreme,
}

/// `x_ell = -(1 + sqrt(1+a)) sqrt(theta)`, `x_r = (1 + sqrt(1+b)) sqrt(theta)`:
/// where the outer tangents from the two raised points touch the parabola.
pub fn tangency_points(spec: &TwoPointSpec) -> (f64, f64) {
    let s = spec.root_theta();
    (-(1.0 + (1.0 + spec.a).sqrt()) * s, (1.0 + (1.0 + spec.b).sqrt()) * s)
}

/// Inner tangency points: the tangent from the left point touching right
/// of it, and the tangent from the right point touching left of it.
pub fn inner_tangency_points(spec: &TwoPointSpec) -> (f64, f64) {
    let s = spec.root_theta();
    (((1.0 + spec.a).sqrt() - 1.0) * s, -((1.0 + spec.b).sqrt() - 1.0) * s)
}

pub fn classify(spec: &TwoPointSpec) -> CaseLabel {
    let (a, b) = (spec.a, spec.b);
    let lhs = (a - b) * (a - b);
    let rhs = 8.0 * (a + b);
    if lhs - rhs <= CASE_TOL * lhs.abs().max(rhs.abs()).max(1.0) {
        return CaseLabel::TwoExtreme;
    }
    match spec.chord_roots_scaled() {
        Some((r0, r1)) => {
            let inside = |r: f64| r.abs() <= 1.0 + CASE_TOL;
            if inside(r0) && inside(r1) {
                CaseLabel::InfinitelyMany
            } else {
                CaseLabel::OneExtreme
            }
        }
        // Unreachable by the discriminant identity; treat as the tie case.
        None => CaseLabel::TwoExtreme,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub slope: f64,
    pub intercept: f64,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    fn through(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let slope = (y1 - y0) / (x1 - x0);
        Self { slope, intercept: y0 - slope * x0, from: x0, to: x1 }
    }

    fn tangent(x_touch: f64, from: f64, to: f64) -> Self {
        let (slope, intercept) = tangent_line(x_touch);
        Self { slope, intercept, from, to }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Piecewise description of the hull of `-x^2` and the two raised points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hull {
    pub spec: TwoPointSpec,
    pub case: CaseLabel,
    /// Outer tangency abscissae `(x_ell, x_r)`.
    pub tangency: (f64, f64),
    /// Linear pieces, left to right.
    pub segments: Vec<Segment>,
    /// Closed intervals on which the hull is piecewise linear.
    pub linear_intervals: Vec<(f64, f64)>,
    /// Interior kink points `(x, y)`.
    pub kinks: Vec<(f64, f64)>,
}

impl Hull {
    pub fn eval(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.from <= x && x <= s.to)
            .map_or(-x * x, |s| s.eval(x))
    }

    pub fn in_linear_part(&self, x: f64) -> bool {
        self.linear_intervals.iter().any(|&(l, r)| l <= x && x <= r)
    }
}

pub fn hull(spec: &TwoPointSpec) -> Hull {
    let s = spec.root_theta();
    let (x_ell, x_r) = tangency_points(spec);
    let (inner_l, inner_r) = inner_tangency_points(spec);
    let left = (-s, spec.a * spec.theta);
    let right = (s, spec.b * spec.theta);
    let case = classify(spec);
    let (segments, linear_intervals, kinks) = match case {
        CaseLabel::TwoExtreme => (
            vec![
                Segment::tangent(x_ell, x_ell, -s),
                Segment::through(left.0, left.1, right.0, right.1),
                Segment::tangent(x_r, s, x_r),
            ],
            vec![(x_ell, x_r)],
            vec![left, right],
        ),
        CaseLabel::InfinitelyMany => (
            vec![
                Segment::tangent(x_ell, x_ell, -s),
                Segment::tangent(inner_l, -s, inner_l),
                Segment::tangent(inner_r, inner_r, s),
                Segment::tangent(x_r, s, x_r),
            ],
            vec![(x_ell, inner_l), (inner_r, x_r)],
            vec![left, right],
        ),
        CaseLabel::OneExtreme => (
            vec![Segment::tangent(x_ell, x_ell, -s), Segment::tangent(inner_l, -s, inner_l)],
            vec![(x_ell, inner_l)],
            vec![left],
        ),
    };
    Hull { spec: *spec, case, tangency: (x_ell, x_r), segments, linear_intervals, kinks }
}

/// Leading exponent of the two-point upper tail.
pub fn two_point_log_rate(spec: &TwoPointSpec) -> f64 {
    match classify(spec) {
        CaseLabel::TwoExtreme => two_extreme_rate(spec),
        CaseLabel::InfinitelyMany => separate_tents_rate(spec),
        CaseLabel::OneExtreme => {
            4.0 / 3.0 * spec.theta.powf(1.5) * (1.0 + spec.a).powf(1.5)
        }
    }
}

/// The two-extreme-point formula, evaluated regardless of the case.
pub fn two_extreme_rate(spec: &TwoPointSpec) -> f64 {
    let (a, b) = (spec.a, spec.b);
    let bracket = 3.0 * (a - b).powi(2)
        + 24.0 * (a + b)
        + 16.0 * ((1.0 + a).powf(1.5) + (1.0 + b).powf(1.5))
        + 32.0;
    spec.theta.powf(1.5) / 24.0 * bracket
}

/// The separate-tents formula, evaluated regardless of the case.
pub fn separate_tents_rate(spec: &TwoPointSpec) -> f64 {
    4.0 / 3.0 * spec.theta.powf(1.5) * ((1.0 + spec.a).powf(1.5) + (1.0 + spec.b).powf(1.5))
}

/// `(4/3) theta^{3/2}`.
pub fn one_point_log_rate(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return domain(format!("theta = {theta} must be positive"));
    }
    Ok(4.0 / 3.0 * theta.powf(1.5))
}

/// Error-term shape `theta^{3/4}` of the one-point rate.
pub fn one_point_envelope(theta: f64) -> f64 {
    theta.powf(0.75)
}

/// Error-term shape `theta^{3/4} + theta^{1/2} log theta` of the two-point rate.
pub fn two_point_envelope(theta: f64) -> f64 {
    theta.powf(0.75) + theta.sqrt() * theta.ln().max(0.0)
}

/// Points `(a, b) = (z^2 + 2z, z^2 - 2z)` whose chord is tangent to the
/// parabola.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentPair {
    pub a: f64,
    pub b: f64,
    /// Set at `z = 1`, where `b = -1` sits on the edge of the valid range.
    pub boundary: bool,
}

pub fn fkg_tangent_pair(z: f64) -> Result<TangentPair> {
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("z = {z} outside [0, 1]"));
    }
    Ok(TangentPair { a: z * z + 2.0 * z, b: z * z - 2.0 * z, boundary: z == 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionStep {
    pub n: u32,
    pub c: f64,
    pub gamma: f64,
    pub theta_ratio: f64,
}

/// Iterates `C -> 1 + C/4`, `gamma -> 2 gamma + 1`, `ratio -> 4 ratio`
/// from `(5, 0, 1)`.
pub fn lower_bound_recursion(n: u32) -> RecursionStep {
    let (mut c, mut gamma, mut ratio) = (5.0, 0.0, 1.0);
    for _ in 0..n {
        c = 1.0 + c / 4.0;
        gamma = 2.0 * gamma + 1.0;
        ratio *= 4.0;
    }
    RecursionStep { n, c, gamma, theta_ratio: ratio }
}

/// Closed form of [`lower_bound_recursion`].
pub fn lower_bound_recursion_closed(n: u32) -> RecursionStep {
    let nf = n as f64;
    RecursionStep {
        n,
        c: 4.0 / 3.0 * (1.0 + 11.0 * 4f64.powf(-nf - 1.0)),
        gamma: 2f64.powf(nf) - 1.0,
        theta_ratio: 4f64.powf(nf),
    }
}
