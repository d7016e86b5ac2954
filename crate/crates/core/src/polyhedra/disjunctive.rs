use serde_json::Value;

use super::cone::PolyCone;
use super::polyhedron::Polyhedron;
use crate::exactmath::scalar::Scalar;

/// Finite union of polyhedra.
#[derive(Clone, Debug)]
pub struct DisjunctiveSet<T> {
    pub dim: usize,
    pub pieces: Vec<Polyhedron<T>>,
}

impl<T: Scalar> DisjunctiveSet<T> {
    pub fn new(dim: usize, pieces: Vec<Polyhedron<T>>) -> Self {
        assert!(pieces.iter().all(|p| p.dim() == dim), "piece dimensions");
        Self { dim, pieces }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Indices of the pieces containing `x`.
    pub fn containing_pieces(&self, x: &[T]) -> Vec<usize> {
        (0..self.pieces.len()).filter(|&i| self.pieces[i].contains(x)).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.pieces.iter().map(Polyhedron::to_json).collect())
    }
}

/// `(∪ K_i)° = ∩ K_i°`; every piece must be a cone.
pub fn disjunctive_polar<T: Scalar>(d: &DisjunctiveSet<T>) -> PolyCone<T> {
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for p in &d.pieces {
        let k = p.as_cone().expect("disjunctive_polar requires conic pieces");
        ineq.extend(k.rays().iter().cloned());
        eq.extend(k.lineality().iter().cloned());
    }
    PolyCone::from_h(d.dim, ineq, eq).expect("generators match dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn opposite_orthants() {
        let d = DisjunctiveSet::new(
            2,
            vec![
                PolyCone::<Rational>::orthant(2, true).to_polyhedron(),
                PolyCone::orthant(2, false).to_polyhedron(),
            ],
        );
        assert!(disjunctive_polar(&d).is_zero());
    }

    #[test]
    fn single_piece_is_ordinary_polar() {
        let k = PolyCone::<Rational>::orthant(2, true);
        let d = DisjunctiveSet::new(2, vec![k.to_polyhedron()]);
        assert!(disjunctive_polar(&d).same_set(&k.polar()));
    }

    #[test]
    fn whole_space_piece() {
        let d = DisjunctiveSet::new(
            2,
            vec![PolyCone::<Rational>::whole_space(2).to_polyhedron(), PolyCone::orthant(2, true).to_polyhedron()],
        );
        assert!(disjunctive_polar(&d).is_zero());
    }
}
