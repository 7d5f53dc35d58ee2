//! Monte Carlo estimators and the analytic bounds they are compared with.

mod avoidance;
mod convolution;
mod inequalities;
mod shape;
mod tail;
mod grids;

pub use avoidance::{
    analytic_avoidance_lower_bound, analytic_avoidance_upper_bound, avoidance_upper_exponent,
    mc_avoidance, particle_avoidance, AnalyticBound, LowerBoundVariant, ParticleConfig,
    CLOSED_FORM_MIN_LENGTH,
};
pub use convolution::{general_data_value, hyp_check, HypParams, HypReport};
pub use inequalities::{
    fkg_bk_report, sup_interval_tail_check, BkRow, EnsembleParams, FkgBkReport, FkgRow, SupTailReport,
    SupTailRow, SUPINT_SURROGATE,
};
pub use shape::{conditioned_shape, ShapeConfig, ShapeReport, SHAPE_SURROGATE};
pub use tail::{
    mc_two_point, mc_two_point_mirrored, naive_one_point_tail, tilted_one_point_tail, TailConfig, TailReport,
};

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Lower barrier of an avoidance event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Barrier {
    /// `-x^2`.
    Parabola,
    /// `-x^2 + shift`.
    ShiftedParabola(f64),
}

impl Barrier {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Barrier::Parabola => -x * x,
            Barrier::ShiftedParabola(s) => -x * x + s,
        }
    }
}

/// A rate-two bridge from `(z1, left_height)` to `(z2, right_height)` that
/// must stay strictly above `barrier`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceSpec {
    pub z1: f64,
    pub z2: f64,
    pub left_height: f64,
    pub right_height: f64,
    pub barrier: Barrier,
}

impl AvoidanceSpec {
    pub fn new(z1: f64, z2: f64, left_height: f64, right_height: f64, barrier: Barrier) -> Result<Self> {
        if !(z1 < z2) {
            return domain(format!("need z1 < z2, got {z1} and {z2}"));
        }
        if !(left_height > barrier.eval(z1) && right_height > barrier.eval(z2)) {
            return domain("endpoint heights must lie strictly above the barrier");
        }
        Ok(Self { z1, z2, left_height, right_height, barrier })
    }

    /// `[-z, z]` with both endpoints one unit above `-x^2`.
    pub fn symmetric(z: f64) -> Result<Self> {
        Self::new(-z, z, -z * z + 1.0, -z * z + 1.0, Barrier::Parabola)
    }

    pub fn length(&self) -> f64 {
        self.z2 - self.z1
    }
}
