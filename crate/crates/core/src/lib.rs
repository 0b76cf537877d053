//! Stopping criteria for primal-dual hybrid gradient on linearly constrained
//! convex problems.
//!
//! The crate evaluates the optimality gap, feasibility error, KKT error,
//! projected duality gap and smoothed duality gap along PDHG trajectories,
//! checks the inequalities that relate them, and ships independent oracles
//! for certifying every closed form. Numeric code is generic over
//! [`scalar::Real`]; the aliases below fix the scalar to `f64`.

pub mod bounds;
pub mod criteria;
pub mod error;
pub mod ext;
pub mod harness;
pub mod instances;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod pdhg;
pub mod problem;
pub mod regularity;
pub mod scalar;

pub use error::{Error, Result};

pub type Problem = problem::ProblemInstance<f64>;
pub type Point = problem::PrimalDualPoint<f64>;
pub type Constraint = problem::AffineConstraint<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Smoothing = criteria::SmoothingParams<f64>;
pub type Criterion = criteria::CriterionValue<f64>;
pub type Bound = bounds::BoundReport<f64>;
pub type Steps = pdhg::StepSizes<f64>;
pub type Trajectory = pdhg::Trajectory<f64>;
pub type Value = ext::Ext<f64>;
