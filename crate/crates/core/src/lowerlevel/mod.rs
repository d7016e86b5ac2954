//! Exact KKT analysis of the lower-level system `g(y) ≤ 0`.
//!
//! Index sets are 0-based in the API and 1-based in JSON output.

mod critical;
mod graph;

pub use critical::{
    critical_cone, critical_normal_cone, directional_multipliers, CriticalConeData, DirectionalMultiplierData,
};
pub use graph::{graph_tangent_member, graph_tangent_slice, GraphTangentSlice, TangentCell, TangentMembership};

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::exactmath::lp::{lp_solve, LpOutcome, Sense};
use crate::exactmath::matrix::Matrix;
use crate::exactmath::rational::{mat_json, vec_json};
use crate::exactmath::scalar::lex_cmp;
use crate::model::MpecProblem;
use crate::polyhedra::Polyhedron;
use crate::{Error, Rational};

/// Lower-level data evaluated at one `y`.
#[derive(Clone, Debug)]
pub struct LowerPoint {
    pub y: Vec<Rational>,
    pub g_values: Vec<Rational>,
    /// `∇g(y)`, q×m.
    pub grads: Matrix<Rational>,
    pub active: Vec<usize>,
    /// `∇²g_i(y)`, one m×m matrix per constraint.
    pub hessians: Vec<Matrix<Rational>>,
}

impl LowerPoint {
    pub fn new(p: &MpecProblem, y: &[Rational]) -> Result<Self, Error> {
        if y.len() != p.m {
            return Err(Error::DimensionMismatch(format!("y has {} entries, expected {}", y.len(), p.m)));
        }
        let z = p.join(&p.x, y);
        let g_values = MpecProblem::eval_all(&p.g, &z);
        if let Some(i) = g_values.iter().position(|v| v.is_positive()) {
            return Err(Error::InfeasiblePoint(format!("g{}(y) = {} > 0", i + 1, g_values[i])));
        }
        let active = (0..p.q).filter(|&i| g_values[i].is_zero()).collect();
        let hessians = p
            .g
            .iter()
            .map(|gi| MpecProblem::jacobian(&gi_gradient(p, gi), &z, p.ys()))
            .collect();
        Ok(LowerPoint { y: y.to_vec(), g_values, grads: p.grad_g(&z), active, hessians })
    }

    pub fn m(&self) -> usize {
        self.grads.ncols()
    }

    pub fn q(&self) -> usize {
        self.grads.nrows()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.contains(&i)
    }

    /// `∇²(λᵀg)(y)`.
    pub fn hess_lag(&self, lambda: &[Rational]) -> Matrix<Rational> {
        let m = self.m();
        let mut h = Matrix::<Rational>::zeros(m, m);
        for (hi, li) in self.hessians.iter().zip(lambda) {
            if li.is_zero() {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    h[(a, b)] = h[(a, b)].clone() + li.clone() * hi[(a, b)].clone();
                }
            }
        }
        h
    }

    /// m×q matrix whose column i is `∇²g_i(y) v`, so `∇²(λᵀg)(y)v = H_v λ`.
    pub fn hess_times(&self, v: &[Rational]) -> Matrix<Rational> {
        let cols: Vec<Vec<Rational>> = self.hessians.iter().map(|h| h.mul_vec(v)).collect();
        Matrix::from_rows_unchecked(self.m(), cols).transpose()
    }

    /// The multiplier polyhedron `Λ(y, y*)` in ℝ^q.
    pub fn multiplier_polyhedron(&self, y_star: &[Rational]) -> Polyhedron<Rational> {
        let q = self.q();
        let mut ineq = Vec::new();
        let mut eq = Vec::new();
        for i in 0..q {
            let mut e = vec![Rational::zero(); q];
            if self.is_active(i) {
                e[i] = -Rational::from_integer(1.into());
                ineq.push((e, Rational::zero()));
            } else {
                e[i] = Rational::from_integer(1.into());
                eq.push((e, Rational::zero()));
            }
        }
        for (j, ys) in y_star.iter().enumerate() {
            eq.push((self.grads.column(j), ys.clone()));
        }
        Polyhedron::from_h(q, ineq, eq).expect("multiplier rows have length q")
    }
}

fn gi_gradient(p: &MpecProblem, gi: &crate::model::Poly) -> Vec<crate::model::Poly> {
    p.ys().map(|j| gi.differentiate(j)).collect()
}

/// `I(y) = {i : g_i(y) = 0}`.
pub fn active_set(p: &MpecProblem, y: &[Rational]) -> Result<Vec<usize>, Error> {
    Ok(LowerPoint::new(p, y)?.active)
}

/// `Λ(y, y*)` with its extreme points `E(y, y*)`.
#[derive(Clone, Debug)]
pub struct MultiplierSet {
    pub y: Vec<Rational>,
    pub y_star: Vec<Rational>,
    pub active: Vec<usize>,
    pub set: Polyhedron<Rational>,
    /// Sorted lexicographically descending.
    pub extreme: Vec<Vec<Rational>>,
    /// Extreme rays of the recession cone (nonempty iff Λ is unbounded).
    pub rays: Vec<Vec<Rational>>,
    /// When Λ = ∅: `d` with `∇g_i(y)d ≤ 0` (i active) and `y*·d > 0`.
    pub farkas: Option<Vec<Rational>>,
}

impl MultiplierSet {
    pub fn is_empty(&self) -> bool {
        self.extreme.is_empty()
    }

    pub fn contains(&self, lambda: &[Rational]) -> bool {
        self.set.contains(lambda)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "y": vec_json(&self.y),
            "y_star": vec_json(&self.y_star),
            "active": self.active.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "empty": self.is_empty(),
            "polyhedron": self.set.to_json(),
            "extreme_points": mat_json(&self.extreme),
            "rays": mat_json(&self.rays),
            "farkas": self.farkas.as_ref().map(|d| vec_json(d)),
        })
    }
}

pub(crate) fn multiplier_set_at(lp: &LowerPoint, y_star: &[Rational]) -> Result<MultiplierSet, Error> {
    if y_star.len() != lp.m() {
        return Err(Error::DimensionMismatch(format!("y* has {} entries, expected {}", y_star.len(), lp.m())));
    }
    let set = lp.multiplier_polyhedron(y_star);
    let (extreme, rays, farkas) = match lp_solve(&set.to_lp(vec![Rational::zero(); lp.q()], Sense::Min))? {
        LpOutcome::Infeasible { farkas_eq, .. } => {
            // equality rows: q inactive/unit rows come first only for inactive
            // indices, then the m stationarity rows
            let skip = lp.q() - lp.active.len();
            let d = farkas_eq[skip..].iter().map(|v| -v.clone()).collect();
            (Vec::new(), Vec::new(), Some(d))
        }
        _ => {
            let v = set.vrep();
            let mut ext = v.vertices.clone();
            ext.sort_by(|a, b| lex_cmp(b, a));
            (ext, v.rays.clone(), None)
        }
    };
    Ok(MultiplierSet { y: lp.y.clone(), y_star: y_star.to_vec(), active: lp.active.clone(), set, extreme, rays, farkas })
}

pub fn multiplier_set(p: &MpecProblem, y: &[Rational], y_star: &[Rational]) -> Result<MultiplierSet, Error> {
    multiplier_set_at(&LowerPoint::new(p, y)?, y_star)
}

pub(crate) fn min_norm_at(lp: &LowerPoint, y_star: &[Rational]) -> Result<Vec<Rational>, Error> {
    let set = lp.multiplier_polyhedron(y_star);
    let ones = vec![Rational::from_integer(1.into()); lp.q()];
    let value = match lp_solve(&set.to_lp(ones.clone(), Sense::Min))? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible { .. } => return Err(Error::NoMultiplier),
        LpOutcome::Unbounded { .. } => unreachable!("ℓ1 norm is bounded below on the orthant"),
    };
    let mut face = set;
    face.add_eq(ones, value);
    face.vrep()
        .vertices
        .iter()
        .max_by(|a, b| lex_cmp(a, b))
        .cloned()
        .ok_or(Error::NoMultiplier)
}

/// ℓ1-minimal multiplier, chosen as the lexicographically greatest vertex of
/// the optimal face (hence an element of `E(y, y*)`).
pub fn min_norm_multiplier(p: &MpecProblem, y: &[Rational], y_star: &[Rational]) -> Result<Vec<Rational>, Error> {
    min_norm_at(&LowerPoint::new(p, y)?, y_star)
}

/// `{i : λ_i > 0}`.
pub fn positive_support(lambda: &[Rational]) -> Vec<usize> {
    (0..lambda.len()).filter(|&i| lambda[i].is_positive()).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exactmath::matrix::linear_basis;
    use crate::exactmath::rational::{int, ints, rat};
    use crate::model::corpus;

    pub(crate) fn pair() -> MpecProblem {
        corpus::load("parabolic_pair")
    }

    #[test]
    fn active_sets() {
        let p = pair();
        assert_eq!(active_set(&p, &ints(&[0, 0, 0])).unwrap(), vec![0, 1]);
        assert!(active_set(&p, &ints(&[0, 0, -1])).unwrap().is_empty());
        assert_eq!(active_set(&p, &[int(1), int(0), rat(-1, 2)]).unwrap(), vec![0]);
        assert!(matches!(active_set(&p, &ints(&[0, 0, 1])), Err(Error::InfeasiblePoint(_))));
    }

    #[test]
    fn segment_of_multipliers() {
        let p = pair();
        let s = multiplier_set(&p, &p.y, &ints(&[0, 0, 1])).unwrap();
        assert_eq!(s.extreme, vec![ints(&[1, 0]), ints(&[0, 1])]);
        assert!(s.rays.is_empty());
        assert!(s.contains(&[rat(1, 3), rat(2, 3)]));
        assert!(!s.contains(&[rat(1, 3), rat(1, 3)]));
        let lp = LowerPoint::new(&p, &p.y).unwrap();
        for l in &s.extreme {
            let rows = lp.grads.select_rows(&positive_support(l));
            assert!(linear_basis(&rows).row_independent);
        }
    }

    #[test]
    fn zero_dual_gives_zero_multiplier() {
        let p = pair();
        let s = multiplier_set(&p, &p.y, &ints(&[0, 0, 0])).unwrap();
        assert_eq!(s.extreme, vec![ints(&[0, 0])]);
    }

    #[test]
    fn infeasible_dual_has_farkas() {
        let p = pair();
        let s = multiplier_set(&p, &p.y, &ints(&[1, 0, 0])).unwrap();
        assert!(s.is_empty());
        let d = s.farkas.unwrap();
        // y*·d > 0 while both active gradients (0,0,1) have ∇g_i·d ≤ 0
        assert!(d[0].is_positive());
        assert!(!d[2].is_positive());
    }

    #[test]
    fn min_norm_tie_break_and_homogeneity() {
        let p = pair();
        assert_eq!(min_norm_multiplier(&p, &p.y, &ints(&[0, 0, 1])).unwrap(), ints(&[1, 0]));
        assert_eq!(min_norm_multiplier(&p, &p.y, &ints(&[0, 0, 2])).unwrap(), ints(&[2, 0]));
        assert_eq!(min_norm_multiplier(&p, &p.y, &ints(&[0, 0, 0])).unwrap(), ints(&[0, 0]));
        assert!(matches!(min_norm_multiplier(&p, &p.y, &ints(&[1, 0, 0])), Err(Error::NoMultiplier)));
    }

    #[test]
    fn hessian_products() {
        let p = pair();
        let lp = LowerPoint::new(&p, &p.y).unwrap();
        let hv = lp.hess_times(&ints(&[1, 2, 3]));
        assert_eq!(hv.row_vecs(), vec![ints(&[1, 0]), ints(&[0, 2]), ints(&[0, 0])]);
    }
}
