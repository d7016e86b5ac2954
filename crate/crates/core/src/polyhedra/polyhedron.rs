use std::sync::OnceLock;

use serde_json::{json, Value};

use super::cone::{dedup_vecs, PolyCone};
use super::dd::{dd_cone, sort_desc};
use crate::exactmath::lp::{find_feasible, lp_solve, LpOutcome, LpProblem, Sense};
use crate::exactmath::matrix::Matrix;
use crate::exactmath::scalar::{dot, neg, Scalar};
use crate::Error;

/// One H-row `a·x ≤ b` (or `= b`).
pub type Row<T> = (Vec<T>, T);

#[derive(Clone, Debug, PartialEq)]
pub struct PolyVRep<T> {
    pub empty: bool,
    pub vertices: Vec<Vec<T>>,
    pub rays: Vec<Vec<T>>,
    pub lineality: Vec<Vec<T>>,
}

/// Vertex list with the pointedness flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePoints<T> {
    pub points: Vec<Vec<T>>,
    pub not_pointed: bool,
}

/// `{x : Ax ≤ b, Cx = d}` with a lazily cached V-representation.
#[derive(Clone, Debug)]
pub struct Polyhedron<T> {
    dim: usize,
    ineq: Vec<Row<T>>,
    eq: Vec<Row<T>>,
    vrep: OnceLock<PolyVRep<T>>,
}

impl<T: Scalar> Polyhedron<T> {
    pub fn from_h(dim: usize, ineq: Vec<Row<T>>, eq: Vec<Row<T>>) -> Result<Self, Error> {
        for (r, _) in ineq.iter().chain(&eq) {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in dimension {dim}",
                    r.len()
                )));
            }
        }
        Ok(Self { dim, ineq, eq, vrep: OnceLock::new() })
    }

    pub(crate) fn from_h_unchecked(dim: usize, ineq: Vec<Row<T>>, eq: Vec<Row<T>>) -> Self {
        Self::from_h(dim, ineq, eq).expect("rows match dimension")
    }

    /// `conv(vertices) + cone(rays) + span(lineality)`; empty when there are no vertices.
    pub fn from_generators(
        dim: usize,
        vertices: Vec<Vec<T>>,
        rays: Vec<Vec<T>>,
        lineality: Vec<Vec<T>>,
    ) -> Result<Self, Error> {
        for r in vertices.iter().chain(&rays).chain(&lineality) {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator of length {} in dimension {dim}",
                    r.len()
                )));
            }
        }
        if vertices.is_empty() {
            return Ok(Self::empty(dim));
        }
        // polar of the homogenized cone: (a, s) with a·v + s ≤ 0, a·r ≤ 0, a·l = 0
        let lift = |v: &Vec<T>, t: T| {
            let mut w = v.clone();
            w.push(t);
            w
        };
        let mut hin: Vec<Vec<T>> = vertices.iter().map(|v| lift(v, T::one())).collect();
        hin.extend(rays.iter().map(|r| lift(r, T::zero())));
        let heq: Vec<Vec<T>> = lineality.iter().map(|l| lift(l, T::zero())).collect();
        let polar = dd_cone(dim + 1, &hin, &heq);
        let split = |w: &Vec<T>| -> Option<Row<T>> {
            let a = w[..dim].to_vec();
            if a.iter().all(Scalar::is_negligible) {
                return None;
            }
            Some((a, -w[dim].clone()))
        };
        let ineq = polar.rays.iter().filter_map(split).collect();
        let eq = polar.lineality.iter().filter_map(split).collect();
        Ok(Self::from_h_unchecked(dim, ineq, eq))
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_h_unchecked(dim, vec![(vec![T::zero(); dim], -T::one())], Vec::new())
    }

    pub fn point(x: &[T]) -> Self {
        let dim = x.len();
        let eq = (0..dim)
            .map(|i| {
                let mut r = vec![T::zero(); dim];
                r[i] = T::one();
                (r, x[i].clone())
            })
            .collect();
        Self::from_h_unchecked(dim, Vec::new(), eq)
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn cuboid(lo: &[T], hi: &[T]) -> Self {
        let dim = lo.len();
        let mut ineq = Vec::new();
        for i in 0..dim {
            let mut r = vec![T::zero(); dim];
            r[i] = T::one();
            ineq.push((r.clone(), hi[i].clone()));
            ineq.push((neg(&r), -lo[i].clone()));
        }
        Self::from_h_unchecked(dim, ineq, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineq(&self) -> &[Row<T>] {
        &self.ineq
    }

    pub fn eqs(&self) -> &[Row<T>] {
        &self.eq
    }

    pub fn add_ineq(&mut self, a: Vec<T>, b: T) {
        assert_eq!(a.len(), self.dim);
        self.ineq.push((a, b));
        self.vrep = OnceLock::new();
    }

    pub fn add_eq(&mut self, a: Vec<T>, b: T) {
        assert_eq!(a.len(), self.dim);
        self.eq.push((a, b));
        self.vrep = OnceLock::new();
    }

    pub fn to_lp(&self, c: Vec<T>, sense: Sense) -> LpProblem<T> {
        let mut p = LpProblem::with_objective(c, sense);
        for (a, b) in &self.ineq {
            p.add_le(a.clone(), b.clone());
        }
        for (a, b) in &self.eq {
            p.add_eq(a.clone(), b.clone());
        }
        p
    }

    /// Emptiness decided by an LP (independent of the cached V-rep).
    pub fn is_empty(&self) -> bool {
        self.feasible_point().is_none()
    }

    pub fn feasible_point(&self) -> Option<Vec<T>> {
        find_feasible(&self.to_lp(vec![T::zero(); self.dim], Sense::Min)).expect("consistent dims")
    }

    /// Homogenized cone `{(x,t) : Ax − bt ≤ 0, Cx − dt = 0, t ≥ 0}`.
    pub fn homogenization(&self) -> PolyCone<T> {
        let lift = |(a, b): &Row<T>| {
            let mut w = a.clone();
            w.push(-b.clone());
            w
        };
        let mut t = vec![T::zero(); self.dim + 1];
        t[self.dim] = -T::one();
        let mut ineq = vec![t];
        ineq.extend(self.ineq.iter().map(lift));
        PolyCone::from_h_unchecked(self.dim + 1, ineq, self.eq.iter().map(lift).collect())
    }

    pub fn vrep(&self) -> &PolyVRep<T> {
        self.vrep.get_or_init(|| {
            let h = self.homogenization();
            let g = h.generators();
            let mut vertices = Vec::new();
            let mut rays = Vec::new();
            for r in &g.rays {
                let t = &r[self.dim];
                if t.is_pos() {
                    vertices.push(r[..self.dim].iter().map(|x| x.clone() / t.clone()).collect());
                } else {
                    rays.push(r[..self.dim].to_vec());
                }
            }
            let lineality: Vec<Vec<T>> = g.lineality.iter().map(|l| l[..self.dim].to_vec()).collect();
            sort_desc(&mut vertices);
            dedup_vecs(&mut vertices);
            let empty = vertices.is_empty();
            if empty {
                return PolyVRep { empty, vertices, rays: Vec::new(), lineality: Vec::new() };
            }
            PolyVRep { empty, vertices, rays, lineality }
        })
    }

    /// Both representations populated.
    pub fn dd_convert(&self) -> Self {
        let p = self.clone();
        p.vrep();
        p
    }

    /// Vertices; `not_pointed` when the lineality space is nontrivial (the
    /// list is then empty).
    pub fn extreme_points(&self) -> Result<ExtremePoints<T>, Error> {
        let v = self.vrep();
        if v.empty {
            return Err(Error::EmptySet);
        }
        if !v.lineality.is_empty() {
            return Ok(ExtremePoints { points: Vec::new(), not_pointed: true });
        }
        Ok(ExtremePoints { points: v.vertices.clone(), not_pointed: false })
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim
            && self.ineq.iter().all(|(a, b)| !(dot(a, x) - b.clone()).is_pos())
            && self.eq.iter().all(|(a, b)| (dot(a, x) - b.clone()).is_negligible())
    }

    /// `other ⊆ self`, by generator membership.
    pub fn contains_poly(&self, other: &Polyhedron<T>) -> bool {
        let v = other.vrep();
        if v.empty {
            return true;
        }
        let rec = self.recession_cone();
        v.vertices.iter().all(|x| self.contains(x))
            && v.rays.iter().all(|r| rec.contains(r))
            && v.lineality.iter().all(|l| rec.contains(l) && rec.contains(&neg(l)))
    }

    /// Set equality by mutual generator membership.
    pub fn same_set(&self, other: &Polyhedron<T>) -> bool {
        self.dim == other.dim && self.contains_poly(other) && other.contains_poly(self)
    }

    /// Every H-row of `self` is valid on every generator of `other`.
    pub fn rows_valid_on(&self, other: &Polyhedron<T>) -> bool {
        self.contains_poly(other)
    }

    pub fn recession_cone(&self) -> PolyCone<T> {
        PolyCone::from_h_unchecked(
            self.dim,
            self.ineq.iter().map(|(a, _)| a.clone()).collect(),
            self.eq.iter().map(|(a, _)| a.clone()).collect(),
        )
    }

    pub fn intersect(&self, other: &Polyhedron<T>) -> Polyhedron<T> {
        assert_eq!(self.dim, other.dim);
        let mut ineq = self.ineq.clone();
        ineq.extend(other.ineq.iter().cloned());
        let mut eq = self.eq.clone();
        eq.extend(other.eq.iter().cloned());
        Self::from_h_unchecked(self.dim, ineq, eq)
    }

    pub fn product(&self, other: &Polyhedron<T>) -> Polyhedron<T> {
        let d = self.dim + other.dim;
        let lift = |(a, b): &Row<T>, off: usize| {
            let mut v = vec![T::zero(); d];
            for (i, x) in a.iter().enumerate() {
                v[off + i] = x.clone();
            }
            (v, b.clone())
        };
        let ineq = self.ineq.iter().map(|r| lift(r, 0)).chain(other.ineq.iter().map(|r| lift(r, self.dim))).collect();
        let eq = self.eq.iter().map(|r| lift(r, 0)).chain(other.eq.iter().map(|r| lift(r, self.dim))).collect();
        Self::from_h_unchecked(d, ineq, eq)
    }

    /// Rows active at `z` (requires membership).
    fn active_rows(&self, z: &[T]) -> Result<Vec<&Vec<T>>, Error> {
        if !self.contains(z) {
            return Err(Error::PointNotInSet);
        }
        Ok(self
            .ineq
            .iter()
            .filter(|(a, b)| (dot(a, z) - b.clone()).is_negligible())
            .map(|(a, _)| a)
            .collect())
    }

    /// `T_p(z) = {w : A_active w ≤ 0, Cw = 0}`.
    pub fn tangent_cone(&self, z: &[T]) -> Result<PolyCone<T>, Error> {
        let act = self.active_rows(z)?.into_iter().cloned().collect();
        Ok(PolyCone::from_h_unchecked(self.dim, act, self.eq.iter().map(|(a, _)| a.clone()).collect()))
    }

    /// `N_p(z) = T_p(z)°`.
    pub fn normal_cone(&self, z: &[T]) -> Result<PolyCone<T>, Error> {
        Ok(self.tangent_cone(z)?.polar())
    }

    /// `N_p(z) ∩ {u}^⊥` when `u ∈ T_p(z)`, `None` (the empty marker) otherwise.
    pub fn directional_normal_cone(&self, z: &[T], u: &[T]) -> Result<Option<PolyCone<T>>, Error> {
        let t = self.tangent_cone(z)?;
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("direction of length {}", u.len())));
        }
        if !t.contains(u) {
            return Ok(None);
        }
        Ok(Some(t.polar().with_eq(u.to_vec())))
    }

    /// `{Mx + offset : x ∈ self}`.
    pub fn affine_image(&self, m: &Matrix<T>, offset: &[T]) -> Result<Polyhedron<T>, Error> {
        if m.ncols() != self.dim || m.nrows() != offset.len() {
            return Err(Error::DimensionMismatch(format!(
                "map {}x{} with offset {} on dimension {}",
                m.nrows(),
                m.ncols(),
                offset.len(),
                self.dim
            )));
        }
        let v = self.vrep();
        if v.empty {
            return Ok(Self::empty(m.nrows()));
        }
        let verts = v
            .vertices
            .iter()
            .map(|x| {
                m.mul_vec(x).into_iter().zip(offset).map(|(a, b)| a + b.clone()).collect()
            })
            .collect();
        let rays = v.rays.iter().map(|r| m.mul_vec(r)).collect();
        let lin = v.lineality.iter().map(|l| m.mul_vec(l)).collect();
        let img = Self::from_generators(m.nrows(), verts, rays, lin)?;
        Ok(img.dd_convert())
    }

    /// Irredundant H-representation: implicit equalities detected and
    /// merged into an RREF equality block, every remaining inequality reduced
    /// modulo the equalities, normalized, and dropped when an LP shows it is
    /// implied by the others.
    pub fn canonical_h(&self) -> (Vec<Row<T>>, Vec<Row<T>>) {
        if self.is_empty() {
            let e = Self::empty(self.dim);
            return (e.ineq, Vec::new());
        }
        let base = self.to_lp(vec![T::zero(); self.dim], Sense::Min);
        let mut eq_rows: Vec<Vec<T>> = self
            .eq
            .iter()
            .map(|(a, b)| {
                let mut r = a.clone();
                r.push(b.clone());
                r
            })
            .collect();
        let mut cand: Vec<Row<T>> = Vec::new();
        for (a, b) in &self.ineq {
            let mut p = base.clone();
            p.c = a.clone();
            let tight = matches!(lp_solve(&p).expect("dims"),
                LpOutcome::Optimal { ref value, .. } if (value.clone() - b.clone()).is_negligible());
            if tight {
                let mut r = a.clone();
                r.push(b.clone());
                eq_rows.push(r);
            } else {
                cand.push((a.clone(), b.clone()));
            }
        }
        let eqm = if eq_rows.is_empty() {
            Vec::new()
        } else {
            let (r, piv) = Matrix::from_rows_unchecked(self.dim + 1, eq_rows).rref();
            (0..piv.len()).map(|i| r.row(i).to_vec()).collect::<Vec<_>>()
        };
        let pivots: Vec<usize> = eqm
            .iter()
            .map(|r| r.iter().position(|x| !x.is_negligible()).expect("nonzero rref row"))
            .collect();
        let mut reduced: Vec<Vec<T>> = Vec::new();
        for (a, b) in cand {
            let mut r = a;
            r.push(b);
            for (e, &p) in eqm.iter().zip(&pivots) {
                let f = r[p].clone();
                if !f.is_zero() {
                    for (x, y) in r.iter_mut().zip(e) {
                        *x = x.clone() - f.clone() * y.clone();
                    }
                }
            }
            if r[..self.dim].iter().all(Scalar::is_negligible) {
                continue;
            }
            T::normalize_direction(&mut r);
            reduced.push(r);
        }
        dedup_vecs(&mut reduced);
        let mut keep = vec![true; reduced.len()];
        for i in 0..reduced.len() {
            let mut p = LpProblem::with_objective(reduced[i][..self.dim].to_vec(), Sense::Max);
            for e in &eqm {
                p.add_eq(e[..self.dim].to_vec(), e[self.dim].clone());
            }
            for (j, r) in reduced.iter().enumerate() {
                if j != i && keep[j] {
                    p.add_le(r[..self.dim].to_vec(), r[self.dim].clone());
                }
            }
            if let LpOutcome::Optimal { value, .. } = lp_solve(&p).expect("dims") {
                if !(value - reduced[i][self.dim].clone()).is_pos() {
                    keep[i] = false;
                }
            }
        }
        let mut ineq: Vec<Vec<T>> = reduced.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect();
        sort_desc(&mut ineq);
        let mut eqn: Vec<Vec<T>> = eqm
            .into_iter()
            .map(|mut r| {
                T::normalize_direction(&mut r);
                r
            })
            .collect();
        sort_desc(&mut eqn);
        let split = |r: Vec<T>| {
            let b = r[self.dim].clone();
            (r[..self.dim].to_vec(), b)
        };
        (ineq.into_iter().map(split).collect(), eqn.into_iter().map(split).collect())
    }

    pub fn canonical(&self) -> Polyhedron<T> {
        let (ineq, eq) = self.canonical_h();
        Self::from_h_unchecked(self.dim, ineq, eq)
    }

    /// The cone `{a·x ≤ 0, c·x = 0}` when every right-hand side is zero.
    pub fn as_cone(&self) -> Option<PolyCone<T>> {
        if self.ineq.iter().chain(&self.eq).all(|(_, b)| b.is_negligible()) {
            Some(self.recession_cone())
        } else {
            None
        }
    }

    pub fn to_json(&self) -> Value {
        let (ineq, eq) = self.canonical_h();
        let v = self.vrep();
        let rows = |rs: &[Row<T>]| -> Value {
            rs.iter()
                .map(|(a, b)| {
                    let mut v: Vec<Value> = a.iter().map(|x| Value::String(x.to_string())).collect();
                    v.push(Value::String(b.to_string()));
                    Value::Array(v)
                })
                .collect()
        };
        let gens = |rs: &[Vec<T>]| -> Value {
            rs.iter()
                .map(|r| Value::Array(r.iter().map(|x| Value::String(x.to_string())).collect()))
                .collect()
        };
        json!({
            "ineq": rows(&ineq),
            "eq": rows(&eq),
            "rays": gens(&v.rays),
            "lineality": gens(&v.lineality),
            "vertices": gens(&v.vertices),
        })
    }
}

impl<T: Scalar> PartialEq for Polyhedron<T> {
    /// Set equality.
    fn eq(&self, other: &Self) -> bool {
        self.same_set(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{int, ints};
    use crate::Rational;

    type P = Polyhedron<Rational>;

    fn simplex_segment() -> P {
        P::from_h(
            2,
            vec![(ints(&[-1, 0]), int(0)), (ints(&[0, -1]), int(0))],
            vec![(ints(&[1, 1]), int(1))],
        )
        .unwrap()
    }

    #[test]
    fn segment_endpoints() {
        let e = simplex_segment().extreme_points().unwrap();
        assert_eq!(e.points, vec![ints(&[1, 0]), ints(&[0, 1])]);
        assert!(!e.not_pointed);
    }

    #[test]
    fn unit_square_vertices() {
        let sq = P::cuboid(&ints(&[0, 0]), &ints(&[1, 1]));
        assert_eq!(sq.extreme_points().unwrap().points.len(), 4);
    }

    #[test]
    fn diagonal_ray_has_origin_vertex() {
        let p = P::from_h(
            2,
            vec![(ints(&[-1, 0]), int(0)), (ints(&[0, -1]), int(0))],
            vec![(ints(&[1, -1]), int(0))],
        )
        .unwrap();
        let e = p.extreme_points().unwrap();
        assert_eq!(e.points, vec![ints(&[0, 0])]);
        assert!(!e.not_pointed);
        assert_eq!(p.vrep().rays, vec![ints(&[1, 1])]);
    }

    #[test]
    fn empty_set_reported() {
        let p = P::from_h(1, vec![(ints(&[1]), int(-1)), (ints(&[-1]), int(-1))], vec![]).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.extreme_points(), Err(Error::EmptySet));
    }

    #[test]
    fn tangent_and_normal_of_orthant() {
        let p = PolyCone::<Rational>::orthant(2, false).to_polyhedron();
        let t = p.tangent_cone(&ints(&[0, -1])).unwrap();
        assert!(t.same_set(&PolyCone::from_h(2, vec![ints(&[1, 0])], vec![]).unwrap()));
        let n = p.normal_cone(&ints(&[0, 0])).unwrap();
        assert!(n.same_set(&PolyCone::orthant(2, true)));
        assert_eq!(p.tangent_cone(&ints(&[1, 0])), Err(Error::PointNotInSet));
    }

    #[test]
    fn directional_normals() {
        let p = PolyCone::<Rational>::orthant(2, false).to_polyhedron();
        let z = ints(&[0, 0]);
        let n = p.directional_normal_cone(&z, &ints(&[-1, 0])).unwrap().unwrap();
        assert!(n.same_set(&PolyCone::from_generators(2, vec![ints(&[0, 1])], vec![]).unwrap()));
        let full = p.directional_normal_cone(&z, &ints(&[0, 0])).unwrap().unwrap();
        assert!(full.same_set(&PolyCone::orthant(2, true)));
        assert!(p.directional_normal_cone(&z, &ints(&[1, 0])).unwrap().is_none());
    }

    #[test]
    fn images() {
        // ∇g(ȳ)ᵀλ with both gradients (0,0,1)
        let m = Matrix::from_rows(2, vec![ints(&[0, 0]), ints(&[0, 0]), ints(&[1, 1])]).unwrap();
        let img = simplex_segment().affine_image(&m, &ints(&[0, 0, 0])).unwrap();
        assert!(img.same_set(&P::point(&ints(&[0, 0, 1]))));
        let id = simplex_segment().affine_image(&Matrix::identity(2), &ints(&[0, 0])).unwrap();
        assert!(id.same_set(&simplex_segment()));
        let sq = P::cuboid(&ints(&[0, 0]), &ints(&[1, 1]));
        let proj = sq.affine_image(&Matrix::from_rows(2, vec![ints(&[1, 0])]).unwrap(), &ints(&[0])).unwrap();
        assert!(proj.same_set(&P::cuboid(&ints(&[0]), &ints(&[1]))));
    }

    #[test]
    fn canonical_rows() {
        let p = P::from_h(
            2,
            vec![
                (ints(&[1, 0]), int(1)),
                (ints(&[2, 0]), int(4)),
                (ints(&[-1, 0]), int(0)),
                (ints(&[0, 1]), int(0)),
                (ints(&[0, -1]), int(0)),
            ],
            vec![],
        )
        .unwrap();
        let (ineq, eq) = p.canonical_h();
        assert_eq!(eq, vec![(ints(&[0, 1]), int(0))]);
        assert_eq!(ineq, vec![(ints(&[1, 0]), int(1)), (ints(&[-1, 0]), int(0))]);
    }

    #[test]
    fn json_rhs_column() {
        let j = simplex_segment().to_json();
        assert_eq!(j["eq"], json!([["1", "1", "1"]]));
        assert_eq!(j["vertices"], json!([["1", "0"], ["0", "1"]]));
    }
}
