//! Exact polyhedral sets and cones in both representations.

pub mod cone;
pub mod dd;
pub mod disjunctive;
pub mod polyhedron;

pub use cone::PolyCone;
pub use dd::{dd_cone, ConeGens};
pub use disjunctive::{disjunctive_polar, DisjunctiveSet};
pub use polyhedron::{ExtremePoints, PolyVRep, Polyhedron, Row};

/// Generators of `cone` (both representations populated).
pub fn dd_convert<T: crate::Scalar>(cone: &PolyCone<T>) -> PolyCone<T> {
    cone.dd_convert()
}

pub fn polar<T: crate::Scalar>(cone: &PolyCone<T>) -> PolyCone<T> {
    cone.polar()
}
