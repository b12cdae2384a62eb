//! Primal-dual policy gradient for constrained MDPs with risk-based constraints.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar for the common case.

// `!(x > 0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod oracle;
pub mod policy;
pub mod risk;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TrajectoryF64 = env::Trajectory<f64>;
pub type TrajectoryF32 = env::Trajectory<f32>;
pub type DgwwF64 = env::Dgww<f64>;
pub type DgwwF32 = env::Dgww<f32>;
pub type CostLqrF64 = env::CostLqr<f64>;
pub type CostLqrF32 = env::CostLqr<f32>;
pub type RiskMeasureF64 = risk::RiskMeasure<f64>;
pub type RiskMeasureF32 = risk::RiskMeasure<f32>;
pub type RiskSpecF64 = estimators::RiskSpec<f64>;
pub type RiskSpecF32 = estimators::RiskSpec<f32>;
pub type BatchF64 = estimators::Batch<f64>;
pub type BatchF32 = estimators::Batch<f32>;
pub type SolverConfigF64 = solver::SolverConfig<f64>;
pub type SolverConfigF32 = solver::SolverConfig<f32>;
pub type LearnerF64 = solver::Learner<f64>;
pub type LearnerF32 = solver::Learner<f32>;
pub type RunLogF64 = solver::RunLog<f64>;
pub type RunLogF32 = solver::RunLog<f32>;
pub type TabularCmdpF64 = oracle::TabularCmdp<f64>;
pub type TabularCmdpF32 = oracle::TabularCmdp<f32>;
