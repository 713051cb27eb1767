//! Independent reference solver and solution checker, used to test the
//! search-based solvers.

mod brute;
mod validate;

pub use brute::{brute_force_optimal, OracleConfig, OracleError};
pub use validate::{validate, Violation, ViolationKind};
