//! Shift-reduce dependency parsing game for Japanese bunsetsu.
//!
//! - [`transition`]: the parsing state machine, gold-tree oracle and tree checks.
//! - [`corpus`]: sentence files, garden-path templates and mora counting.
//! - [`session`]: session plans, the real-time game engine, logs and bots.
//! - [`analysis`]: covariate extraction, least squares and category reports.
//!
//! Numeric routines in [`analysis`] are generic over [`Scalar`]; the aliases
//! below fix the common choices.

pub mod analysis;
pub mod corpus;
pub mod scalar;
pub mod session;
pub mod transition;

pub use scalar::Scalar;

/// Least-squares fit in double precision.
pub type RegressionFit = analysis::RegressionFit<f64>;
/// Least-squares fit in single precision.
pub type RegressionFit32 = analysis::RegressionFit<f32>;
/// Dense column-major matrix in double precision.
pub type Matrix = analysis::Matrix<f64>;
