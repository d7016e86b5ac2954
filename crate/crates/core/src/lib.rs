//! Exact certification of constraint qualifications for mathematical
//! programs with equilibrium constraints.

pub mod certify;
pub mod cli;
pub mod error;
pub mod exactmath;
pub mod lowerlevel;
pub mod model;
pub mod mpccdiag;
pub mod oracle;
pub mod polyhedra;

pub use error::{Error, Result};
pub use exactmath::Scalar;

pub type Rational = num_rational::BigRational;
pub type RatMatrix = exactmath::Matrix<Rational>;
pub type RatLp = exactmath::LpProblem<Rational>;
pub type RatPolyhedron = polyhedra::Polyhedron<Rational>;
pub type RatCone = polyhedra::PolyCone<Rational>;
pub type RatDisjunctive = polyhedra::DisjunctiveSet<Rational>;
