use std::sync::OnceLock;

use serde_json::{json, Value};

use super::dd::{canonical_subspace, dd_cone, ConeGens};
use super::polyhedron::Polyhedron;
use crate::exactmath::matrix::Matrix;
use crate::exactmath::scalar::{dot, neg, vec_eq, Scalar};
use crate::Error;

/// Polyhedral cone `{x : a·x ≤ 0 (a ∈ ineq), c·x = 0 (c ∈ eq)}` with a lazily
/// cached generator representation.
#[derive(Clone, Debug)]
pub struct PolyCone<T> {
    dim: usize,
    ineq: Vec<Vec<T>>,
    eq: Vec<Vec<T>>,
    gens: OnceLock<ConeGens<T>>,
}

impl<T: Scalar> PolyCone<T> {
    pub fn from_h(dim: usize, ineq: Vec<Vec<T>>, eq: Vec<Vec<T>>) -> Result<Self, Error> {
        for r in ineq.iter().chain(&eq) {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "cone row of length {} in dimension {dim}",
                    r.len()
                )));
            }
        }
        Ok(Self { dim, ineq, eq, gens: OnceLock::new() })
    }

    pub(crate) fn from_h_unchecked(dim: usize, ineq: Vec<Vec<T>>, eq: Vec<Vec<T>>) -> Self {
        Self::from_h(dim, ineq, eq).expect("cone rows match dimension")
    }

    /// The cone generated by `rays` and `lineality`; the H-representation is
    /// the generator list of the polar, hence irredundant.
    pub fn from_generators(dim: usize, rays: Vec<Vec<T>>, lineality: Vec<Vec<T>>) -> Result<Self, Error> {
        for r in rays.iter().chain(&lineality) {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator of length {} in dimension {dim}",
                    r.len()
                )));
            }
        }
        let polar = dd_cone(dim, &rays, &lineality);
        Ok(Self::from_h_unchecked(dim, polar.rays, polar.lineality))
    }

    pub fn whole_space(dim: usize) -> Self {
        Self::from_h_unchecked(dim, Vec::new(), Vec::new())
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_h_unchecked(dim, Vec::new(), Matrix::<T>::identity(dim).row_vecs())
    }

    /// `ℝ^dim₋` or `ℝ^dim₊`.
    pub fn orthant(dim: usize, nonneg: bool) -> Self {
        let s = if nonneg { -T::one() } else { T::one() };
        let rows = (0..dim)
            .map(|i| {
                let mut r = vec![T::zero(); dim];
                r[i] = s.clone();
                r
            })
            .collect();
        Self::from_h_unchecked(dim, rows, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineq(&self) -> &[Vec<T>] {
        &self.ineq
    }

    pub fn eqs(&self) -> &[Vec<T>] {
        &self.eq
    }

    pub fn generators(&self) -> &ConeGens<T> {
        self.gens.get_or_init(|| dd_cone(self.dim, &self.ineq, &self.eq))
    }

    pub fn rays(&self) -> &[Vec<T>] {
        &self.generators().rays
    }

    pub fn lineality(&self) -> &[Vec<T>] {
        &self.generators().lineality
    }

    /// Both representations populated.
    pub fn dd_convert(&self) -> Self {
        let c = self.clone();
        c.generators();
        c
    }

    pub fn is_zero(&self) -> bool {
        self.generators().is_trivial()
    }

    pub fn is_pointed(&self) -> bool {
        self.lineality().is_empty()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim
            && self.ineq.iter().all(|a| !dot(a, x).is_pos())
            && self.eq.iter().all(|c| dot(c, x).is_negligible())
    }

    /// `other ⊆ self`, by generator membership.
    pub fn contains_cone(&self, other: &PolyCone<T>) -> bool {
        other.rays().iter().all(|r| self.contains(r))
            && other.lineality().iter().all(|l| self.contains(l) && self.contains(&neg(l)))
    }

    pub fn same_set(&self, other: &PolyCone<T>) -> bool {
        self.dim == other.dim && self.contains_cone(other) && other.contains_cone(self)
    }

    /// `{y : yᵀx ≤ 0 ∀x ∈ self}`.
    pub fn polar(&self) -> PolyCone<T> {
        let g = self.generators();
        Self::from_h_unchecked(self.dim, g.rays.clone(), g.lineality.clone())
    }

    pub fn intersect(&self, other: &PolyCone<T>) -> PolyCone<T> {
        assert_eq!(self.dim, other.dim, "cone dimensions");
        let mut ineq = self.ineq.clone();
        ineq.extend(other.ineq.iter().cloned());
        let mut eq = self.eq.clone();
        eq.extend(other.eq.iter().cloned());
        Self::from_h_unchecked(self.dim, ineq, eq)
    }

    pub fn with_eq(&self, row: Vec<T>) -> PolyCone<T> {
        let mut eq = self.eq.clone();
        eq.push(row);
        Self::from_h_unchecked(self.dim, self.ineq.clone(), eq)
    }

    pub fn with_ineq(&self, row: Vec<T>) -> PolyCone<T> {
        let mut ineq = self.ineq.clone();
        ineq.push(row);
        Self::from_h_unchecked(self.dim, ineq, self.eq.clone())
    }

    /// `{Mx : x ∈ self}`.
    pub fn linear_image(&self, m: &Matrix<T>) -> PolyCone<T> {
        assert_eq!(m.ncols(), self.dim, "image matrix shape");
        let rays = self.rays().iter().map(|r| m.mul_vec(r)).collect();
        let lin = self.lineality().iter().map(|l| m.mul_vec(l)).collect();
        Self::from_generators(m.nrows(), rays, lin).expect("image dimensions agree")
    }

    /// Irredundant H-representation: facet normals and a basis of the
    /// orthogonal complement of the span, read off the polar's generators.
    pub fn canonical_h(&self) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let p = self.polar();
        (p.rays().to_vec(), p.lineality().to_vec())
    }

    /// Same set, H-representation replaced by the canonical one.
    pub fn canonical(&self) -> PolyCone<T> {
        let (ineq, eq) = self.canonical_h();
        let c = Self::from_h_unchecked(self.dim, ineq, eq);
        let _ = c.gens.set(self.generators().clone());
        c
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &PolyCone<T>) -> PolyCone<T> {
        let d = self.dim + other.dim;
        let lift = |r: &Vec<T>, first: bool| {
            let mut v = vec![T::zero(); d];
            let off = if first { 0 } else { self.dim };
            for (i, x) in r.iter().enumerate() {
                v[off + i] = x.clone();
            }
            v
        };
        let ineq = self.ineq.iter().map(|r| lift(r, true)).chain(other.ineq.iter().map(|r| lift(r, false))).collect();
        let eq = self.eq.iter().map(|r| lift(r, true)).chain(other.eq.iter().map(|r| lift(r, false))).collect();
        Self::from_h_unchecked(d, ineq, eq)
    }

    /// The cone as a polyhedron with zero right-hand sides.
    pub fn to_polyhedron(&self) -> Polyhedron<T> {
        Polyhedron::from_h_unchecked(
            self.dim,
            self.ineq.iter().map(|r| (r.clone(), T::zero())).collect(),
            self.eq.iter().map(|r| (r.clone(), T::zero())).collect(),
        )
    }

    /// A point in the relative interior: sum of rays (lineality adds nothing).
    pub fn relint_point(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.dim];
        for r in self.rays() {
            for (a, b) in s.iter_mut().zip(r) {
                *a = a.clone() + b.clone();
            }
        }
        s
    }

    /// `{"ineq","eq","rays","lineality","vertices"}` with canonical rows.
    pub fn to_json(&self) -> Value {
        let (ineq, eq) = self.canonical_h();
        let rows = |rs: &[Vec<T>]| -> Value {
            rs.iter()
                .map(|r| {
                    let mut v: Vec<Value> = r.iter().map(|x| Value::String(x.to_string())).collect();
                    v.push(Value::String("0".into()));
                    Value::Array(v)
                })
                .collect()
        };
        let gens = |rs: &[Vec<T>]| -> Value {
            rs.iter()
                .map(|r| Value::Array(r.iter().map(|x| Value::String(x.to_string())).collect()))
                .collect()
        };
        let apex = vec![T::zero(); self.dim];
        json!({
            "ineq": rows(&ineq),
            "eq": rows(&eq),
            "rays": gens(self.rays()),
            "lineality": gens(self.lineality()),
            "vertices": gens(std::slice::from_ref(&apex)),
        })
    }
}

impl<T: Scalar> PartialEq for PolyCone<T> {
    /// Set equality.
    fn eq(&self, other: &Self) -> bool {
        self.same_set(other)
    }
}

/// Membership of `x` in the span of `basis`.
pub fn in_span<T: Scalar>(x: &[T], basis: &[Vec<T>]) -> bool {
    if x.iter().all(Scalar::is_negligible) {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    let dim = x.len();
    let b = canonical_subspace(dim, basis.to_vec());
    let mut with = b.clone();
    with.push(x.to_vec());
    canonical_subspace(dim, with).len() == b.len()
}

/// Deduplicate vectors with the scalar's equality convention.
pub fn dedup_vecs<T: Scalar>(v: &mut Vec<Vec<T>>) {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(v.len());
    for x in v.drain(..) {
        if !out.iter().any(|y| vec_eq(y, &x)) {
            out.push(x);
        }
    }
    *v = out;
}
