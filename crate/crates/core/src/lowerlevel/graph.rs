//! Slices of the tangent cone to the graph of the regular normal-cone map:
//! `T(v) = {v* : ∃λ ∈ Λ(y,y*;v), v* ∈ ∇²(λᵀg)(y)v + N_K(v)}`.
//!
//! The coupling between λ's support and μ's sign pattern is resolved by
//! fixed-support cells: one cell per support of a vertex of `Λ(y,y*;v)`, plus
//! the support of the whole face. Within a cell λ ranges over the face
//! restricted to that support and μ over the cone fixed by the support.

use num_traits::Zero;
use serde_json::{json, Value};

use super::critical::{critical_cone_a, directional_at, mu_cone};
use super::{positive_support, LowerPoint};
use crate::exactmath::lp::{lp_solve, LpOutcome, LpProblem, Sense};
use crate::exactmath::matrix::Matrix;
use crate::exactmath::rational::vec_json;
use crate::model::MpecProblem;
use crate::polyhedra::Polyhedron;
use crate::{Error, Rational};

#[derive(Clone, Debug)]
pub struct TangentCell {
    pub support: Vec<usize>,
    /// Lifted set in `(λ, μ) ∈ ℝ^{2q}`.
    pub lifted: Polyhedron<Rational>,
    /// Its image in ℝ^m.
    pub set: Polyhedron<Rational>,
}

#[derive(Clone, Debug)]
pub struct GraphTangentSlice {
    pub v: Vec<Rational>,
    /// `v ∈ K(y,y*)`; otherwise the slice is empty.
    pub critical: bool,
    pub theta: Option<Rational>,
    pub cells: Vec<TangentCell>,
    /// Union of the cells; every cell is contained in the last one, so the
    /// union is that convex polyhedron.
    pub slice: Polyhedron<Rational>,
}

impl GraphTangentSlice {
    pub fn to_json(&self) -> Value {
        json!({
            "v": vec_json(&self.v),
            "critical": self.critical,
            "theta": self.theta.as_ref().map(|t| t.to_string()),
            "cells": self.cells.iter().map(|c| json!({
                "support": c.support.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "set": c.set.to_json(),
            })).collect::<Vec<_>>(),
            "slice": self.slice.to_json(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentMembership {
    pub member: bool,
    pub lambda: Option<Vec<Rational>>,
    pub mu: Option<Vec<Rational>>,
    pub support: Option<Vec<usize>>,
}

impl TangentMembership {
    fn no() -> Self {
        TangentMembership { member: false, lambda: None, mu: None, support: None }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "member": self.member,
            "lambda": self.lambda.as_ref().map(|v| vec_json(v)),
            "mu": self.mu.as_ref().map(|v| vec_json(v)),
            "support": self.support.as_ref().map(|s| s.iter().map(|i| i + 1).collect::<Vec<_>>()),
        })
    }
}

struct Cells {
    theta: Rational,
    /// (support, lifted polyhedron)
    lifted: Vec<(Vec<usize>, Polyhedron<Rational>)>,
    /// `[H_v | ∇gᵀ]`, m × 2q.
    map: Matrix<Rational>,
}

fn lift(row: &[Rational], q: usize, second: bool) -> Vec<Rational> {
    let mut r = vec![Rational::zero(); 2 * q];
    let off = if second { q } else { 0 };
    r[off..off + q].clone_from_slice(row);
    r
}

fn build_cells(lp: &LowerPoint, y_star: &[Rational], v: &[Rational]) -> Result<Cells, Error> {
    let q = lp.q();
    let dir = directional_at(lp, y_star, v)?;
    let mut supports: Vec<Vec<usize>> = Vec::new();
    for vert in &dir.face_vertices {
        let s = positive_support(vert);
        if !supports.contains(&s) {
            supports.push(s);
        }
    }
    let mut all: Vec<usize> = supports.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    supports.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    if !supports.contains(&all) {
        supports.push(all);
    }

    let lifted = supports
        .into_iter()
        .map(|s| {
            let mc = mu_cone(lp, v, &s);
            let mut ineq: Vec<(Vec<Rational>, Rational)> =
                dir.face.ineq().iter().map(|(a, b)| (lift(a, q, false), b.clone())).collect();
            ineq.extend(mc.ineq().iter().map(|a| (lift(a, q, true), Rational::zero())));
            let mut eq: Vec<(Vec<Rational>, Rational)> =
                dir.face.eqs().iter().map(|(a, b)| (lift(a, q, false), b.clone())).collect();
            eq.extend(mc.eqs().iter().map(|a| (lift(a, q, true), Rational::zero())));
            for i in (0..q).filter(|i| !s.contains(i)) {
                let mut e = vec![Rational::zero(); 2 * q];
                e[i] = Rational::from_integer(1.into());
                eq.push((e, Rational::zero()));
            }
            (s, Polyhedron::from_h(2 * q, ineq, eq).expect("lifted rows have length 2q"))
        })
        .collect();

    let hv = lp.hess_times(v);
    let gt = lp.grads.transpose();
    let rows = (0..lp.m()).map(|j| hv.row(j).iter().chain(gt.row(j)).cloned().collect()).collect();
    Ok(Cells { theta: dir.theta, lifted, map: Matrix::from_rows_unchecked(2 * q, rows) })
}

pub(crate) fn slice_at(lp: &LowerPoint, y_star: &[Rational], v: &[Rational]) -> Result<GraphTangentSlice, Error> {
    let m = lp.m();
    if v.len() != m {
        return Err(Error::DimensionMismatch(format!("v has {} entries, expected {m}", v.len())));
    }
    if !critical_cone_a(lp, y_star).contains(v) {
        if lp.multiplier_polyhedron(y_star).is_empty() {
            return Err(Error::NoMultiplier);
        }
        return Ok(GraphTangentSlice {
            v: v.to_vec(),
            critical: false,
            theta: None,
            cells: Vec::new(),
            slice: Polyhedron::empty(m),
        });
    }
    let c = build_cells(lp, y_star, v)?;
    let zero = vec![Rational::zero(); m];
    let cells: Vec<TangentCell> = c
        .lifted
        .into_iter()
        .map(|(support, lifted)| {
            let set = lifted.affine_image(&c.map, &zero).expect("image shape matches");
            TangentCell { support, lifted, set }
        })
        .collect();
    let slice = cells.last().map(|c| c.set.clone()).unwrap_or_else(|| Polyhedron::empty(m));
    Ok(GraphTangentSlice { v: v.to_vec(), critical: true, theta: Some(c.theta), cells, slice })
}

/// The slice `T(v)`; empty when `v ∉ K(y,y*)`.
pub fn graph_tangent_slice(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    v: &[Rational],
) -> Result<GraphTangentSlice, Error> {
    slice_at(&LowerPoint::new(p, y)?, y_star, v)
}

/// ℓ1-minimal `(λ, μ)` in a lifted cell with `[H_v | ∇gᵀ](λ, μ) = v*`: first
/// `Σλ` is minimized, then `Σ|μ|` with `Σλ` held at its optimum.
fn cell_witness(
    lifted: &Polyhedron<Rational>,
    map: &Matrix<Rational>,
    v_star: &[Rational],
    q: usize,
) -> Result<Option<(Vec<Rational>, Vec<Rational>)>, Error> {
    let one = Rational::from_integer(1.into());
    let mut sum_l = vec![Rational::zero(); 2 * q];
    for x in sum_l.iter_mut().take(q) {
        *x = one.clone();
    }
    let mut base = lifted.to_lp(sum_l.clone(), Sense::Min);
    for (j, vs) in v_star.iter().enumerate() {
        base.add_eq(map.row(j).to_vec(), vs.clone());
    }
    let l1 = match lp_solve(&base)? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible { .. } => return Ok(None),
        LpOutcome::Unbounded { .. } => unreachable!("Σλ is bounded below on λ ≥ 0"),
    };

    // variables (λ, μ, t), t ≥ |μ|
    let pad = |r: &[Rational]| -> Vec<Rational> {
        let mut v = r.to_vec();
        v.resize(3 * q, Rational::zero());
        v
    };
    let mut c = vec![Rational::zero(); 3 * q];
    for x in c.iter_mut().skip(2 * q) {
        *x = one.clone();
    }
    let mut lp = LpProblem::with_objective(c, Sense::Min);
    for (a, b) in base.a.iter().zip(&base.b) {
        lp.add_le(pad(a), b.clone());
    }
    for (a, b) in base.ceq.iter().zip(&base.d) {
        lp.add_eq(pad(a), b.clone());
    }
    lp.add_eq(pad(&sum_l), l1);
    for i in 0..q {
        let mut r = vec![Rational::zero(); 3 * q];
        r[q + i] = one.clone();
        r[2 * q + i] = -one.clone();
        lp.add_le(r.clone(), Rational::zero());
        r[q + i] = -one.clone();
        lp.add_le(r, Rational::zero());
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { primal, .. } => Ok(Some((primal[..q].to_vec(), primal[q..2 * q].to_vec()))),
        _ => unreachable!("the first stage found a feasible point"),
    }
}

pub(crate) fn member_at(
    lp: &LowerPoint,
    y_star: &[Rational],
    v: &[Rational],
    v_star: &[Rational],
) -> Result<TangentMembership, Error> {
    if v.len() != lp.m() || v_star.len() != lp.m() {
        return Err(Error::DimensionMismatch("direction length".into()));
    }
    if !critical_cone_a(lp, y_star).contains(v) {
        if lp.multiplier_polyhedron(y_star).is_empty() {
            return Err(Error::NoMultiplier);
        }
        return Ok(TangentMembership::no());
    }
    let c = build_cells(lp, y_star, v)?;
    for (support, lifted) in &c.lifted {
        if let Some((lambda, mu)) = cell_witness(lifted, &c.map, v_star, lp.q())? {
            return Ok(TangentMembership {
                member: true,
                lambda: Some(lambda),
                mu: Some(mu),
                support: Some(support.clone()),
            });
        }
    }
    Ok(TangentMembership::no())
}

/// Exact membership `v* ∈ T(v)` with an ℓ1-minimal witness `(λ, μ)`.
pub fn graph_tangent_member(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    v: &[Rational],
    v_star: &[Rational],
) -> Result<TangentMembership, Error> {
    member_at(&LowerPoint::new(p, y)?, y_star, v, v_star)
}

#[cfg(test)]
mod tests {
    use super::super::tests::pair;
    use super::*;
    use crate::exactmath::rational::{int, ints};

    fn ys() -> Vec<Rational> {
        ints(&[0, 0, 1])
    }

    #[test]
    fn slice_along_first_axis() {
        let p = pair();
        let t = graph_tangent_slice(&p, &p.y, &ys(), &ints(&[1, 0, 0])).unwrap();
        assert!(t.critical);
        assert_eq!(t.theta, Some(int(1)));
        let expect = Polyhedron::from_h(3, vec![], vec![(ints(&[1, 0, 0]), int(1)), (ints(&[0, 1, 0]), int(0))]).unwrap();
        assert!(t.slice.same_set(&expect));
    }

    #[test]
    fn non_critical_direction_is_empty() {
        let p = pair();
        let t = graph_tangent_slice(&p, &p.y, &ys(), &ints(&[0, 0, 1])).unwrap();
        assert!(!t.critical && t.slice.is_empty());
    }

    #[test]
    fn zero_direction_gives_polar() {
        let p = pair();
        let t = graph_tangent_slice(&p, &p.y, &ys(), &ints(&[0, 0, 0])).unwrap();
        let expect = Polyhedron::from_h(3, vec![], vec![(ints(&[1, 0, 0]), int(0)), (ints(&[0, 1, 0]), int(0))]).unwrap();
        assert!(t.slice.same_set(&expect));
    }

    #[test]
    fn diagonal_direction_covers_segment_image() {
        // v = (1,1,0): H(λ)v = (λ1, λ2, 0) over the whole segment
        let p = pair();
        let t = graph_tangent_slice(&p, &p.y, &ys(), &ints(&[1, 1, 0])).unwrap();
        let mid = vec![Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into()), int(7)];
        assert!(t.slice.contains(&mid));
        assert!(!t.slice.contains(&ints(&[1, 1, 0])));
    }

    #[test]
    fn membership_witnesses() {
        let p = pair();
        let r = graph_tangent_member(&p, &p.y, &ys(), &ints(&[1, 0, 0]), &ints(&[1, 0, 0])).unwrap();
        assert!(r.member);
        assert_eq!(r.lambda, Some(ints(&[1, 0])));
        assert_eq!(r.mu, Some(ints(&[0, 0])));
        let r = graph_tangent_member(&p, &p.y, &ys(), &ints(&[1, 0, 0]), &ints(&[0, 0, 0])).unwrap();
        assert!(!r.member);
        let r = graph_tangent_member(&p, &p.y, &ys(), &ints(&[0, 0, 0]), &ints(&[0, 0, 5])).unwrap();
        assert!(r.member);
        let mu = r.mu.unwrap();
        assert_eq!(mu[0].clone() + mu[1].clone(), int(5));
    }
}
