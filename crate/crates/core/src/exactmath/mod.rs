//! Exact arithmetic substrate: scalars, dense matrices and a simplex solver.

pub mod lp;
pub mod matrix;
pub mod rational;
pub mod scalar;

pub use lp::{lp_solve, LpOutcome, LpProblem, Sense};
pub use matrix::{linear_basis, LinearBasis, Matrix};
pub use rational::{fmt_rational, fmt_vec, int, ints, parse_rational, parse_rational_list, rat};
pub use scalar::Scalar;
