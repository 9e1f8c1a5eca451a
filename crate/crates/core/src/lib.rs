//! Moment and tail estimates for order-2 chaoses `Σ a_ij X_i Y_j` and
//! `Σ a_ij X_i X_j` with independent symmetric variables.
//!
//! The deterministic side evaluates the constrained-supremum norms the
//! estimates are built from ([`norms`]) and assembles them into bounds
//! ([`bounds`]); the Monte-Carlo side ([`montecarlo`]) samples the chaoses and
//! compares; [`oracle`] provides brute-force ground truth for small cases.

// NaN inputs are rejected through negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coeffs;
pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod norms;
pub mod oracle;
pub mod par;
pub mod quad;
pub mod rng;
pub mod special;

pub use coeffs::CoeffMatrix;
pub use distributions::{DistributionModel, Kind, TailTable};
pub use error::{Error, Result};
pub use norms::{bilinear_norm, linear_norm, ConstraintBudget, Method, NormSolution, SolverConfig};
pub use par::Exec;
