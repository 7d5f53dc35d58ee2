//! Simulation and verification tools for upper tails of KPZ-type line
//! ensembles: exact Brownian bridges, Gibbs-reweighted ensembles and the
//! resampling chain that samples them, tangent-method geometry, rare-event
//! Monte Carlo estimators, and an experiment harness.

pub mod brownian;
pub mod error;
pub mod estimate;
pub mod estimators;
pub mod geometry;
pub mod gibbs;
pub mod harness;
pub mod parallel;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::{Method, TailEstimate};
pub use rng::RngHandle;
