use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use super::{multiplier_set_at, positive_support, LowerPoint};
use crate::exactmath::lp::{lp_solve, LpOutcome, Sense};
use crate::exactmath::rational::{mat_json, vec_json};
use crate::exactmath::scalar::{dot, lex_cmp};
use crate::model::MpecProblem;
use crate::polyhedra::{PolyCone, Polyhedron};
use crate::{Error, Rational};

/// The critical cone `K(y, y*)` in both H-representations.
#[derive(Clone, Debug)]
pub struct CriticalConeData {
    /// `{v : ∇g_i(y)v ≤ 0 (i ∈ I(y)), vᵀy* = 0}`.
    pub cone: PolyCone<Rational>,
    /// `{v : ∇g_i(y)v = 0 (λ_i > 0), ≤ 0 (λ_i = 0, i ∈ I(y))}` for `lambda`.
    pub per_lambda: PolyCone<Rational>,
    pub lambda: Vec<Rational>,
    pub agree: bool,
}

impl CriticalConeData {
    pub fn to_json(&self) -> Value {
        json!({
            "cone": self.cone.to_json(),
            "lambda": vec_json(&self.lambda),
            "representations_agree": self.agree,
        })
    }
}

pub(crate) fn critical_cone_a(lp: &LowerPoint, y_star: &[Rational]) -> PolyCone<Rational> {
    let ineq = lp.active.iter().map(|&i| lp.grads.row(i).to_vec()).collect();
    PolyCone::from_h(lp.m(), ineq, vec![y_star.to_vec()]).expect("rows have length m")
}

pub(crate) fn critical_cone_b(lp: &LowerPoint, lambda: &[Rational]) -> PolyCone<Rational> {
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for &i in &lp.active {
        let row = lp.grads.row(i).to_vec();
        if lambda[i].is_positive() {
            eq.push(row);
        } else {
            ineq.push(row);
        }
    }
    PolyCone::from_h(lp.m(), ineq, eq).expect("rows have length m")
}

pub(crate) fn critical_cone_at(
    lp: &LowerPoint,
    y_star: &[Rational],
    lambda: Option<&[Rational]>,
) -> Result<CriticalConeData, Error> {
    let ms = multiplier_set_at(lp, y_star)?;
    let lambda = match lambda {
        Some(l) if ms.contains(l) => l.to_vec(),
        Some(_) => return Err(Error::NoMultiplier),
        None => ms.extreme.first().cloned().ok_or(Error::NoMultiplier)?,
    };
    let cone = critical_cone_a(lp, y_star).dd_convert();
    let per_lambda = critical_cone_b(lp, &lambda).dd_convert();
    let agree = cone.same_set(&per_lambda);
    debug_assert!(agree, "critical cone representations differ");
    Ok(CriticalConeData { cone, per_lambda, lambda, agree })
}

/// `K(y, y*)`; `lambda` selects the multiplier for the second representation
/// (default: the first extreme point).
pub fn critical_cone(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    lambda: Option<&[Rational]>,
) -> Result<CriticalConeData, Error> {
    critical_cone_at(&LowerPoint::new(p, y)?, y_star, lambda)
}

/// `θ(y,y*;v)` and the argmax face `Λ(y,y*;v)`.
#[derive(Clone, Debug)]
pub struct DirectionalMultiplierData {
    pub v: Vec<Rational>,
    pub theta: Rational,
    /// `c_i = vᵀ∇²g_i(y)v`; the objective is `cᵀλ`.
    pub objective: Vec<Rational>,
    pub face: Polyhedron<Rational>,
    /// Vertices of the face, lexicographically descending; a subset of `E(y,y*)`.
    pub face_vertices: Vec<Vec<Rational>>,
}

impl DirectionalMultiplierData {
    pub fn to_json(&self) -> Value {
        json!({
            "v": vec_json(&self.v),
            "theta": self.theta.to_string(),
            "face": self.face.to_json(),
            "face_vertices": mat_json(&self.face_vertices),
        })
    }
}

pub(crate) fn directional_at(
    lp: &LowerPoint,
    y_star: &[Rational],
    v: &[Rational],
) -> Result<DirectionalMultiplierData, Error> {
    if v.len() != lp.m() {
        return Err(Error::DimensionMismatch(format!("v has {} entries, expected {}", v.len(), lp.m())));
    }
    if !critical_cone_a(lp, y_star).contains(v) {
        return Err(Error::DirectionNotCritical);
    }
    let set = lp.multiplier_polyhedron(y_star);
    let objective: Vec<Rational> = lp.hessians.iter().map(|h| dot(v, &h.mul_vec(v))).collect();
    let theta = match lp_solve(&set.to_lp(objective.clone(), Sense::Max))? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible { .. } => return Err(Error::NoMultiplier),
        LpOutcome::Unbounded { .. } => return Err(Error::LpUnbounded),
    };
    let mut face = set;
    if !objective.iter().all(Zero::is_zero) {
        face.add_eq(objective.clone(), theta.clone());
    }
    let mut face_vertices = face.vrep().vertices.clone();
    face_vertices.sort_by(|a, b| lex_cmp(b, a));
    Ok(DirectionalMultiplierData { v: v.to_vec(), theta, objective, face, face_vertices })
}

pub fn directional_multipliers(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    v: &[Rational],
) -> Result<DirectionalMultiplierData, Error> {
    directional_at(&LowerPoint::new(p, y)?, y_star, v)
}

/// The μ-cone `{μ : μᵀ∇g(y)v = 0; μ_i ≥ 0 (i ∈ I, λ_i = 0); μ_i free (λ_i > 0);
/// μ_i = 0 (i ∉ I)}` for a support pattern `pos = I⁺(λ)`.
pub(crate) fn mu_cone(lp: &LowerPoint, v: &[Rational], pos: &[usize]) -> PolyCone<Rational> {
    let q = lp.q();
    let mut ineq = Vec::new();
    let mut eq = vec![lp.grads.mul_vec(v)];
    for i in 0..q {
        let mut e = vec![Rational::zero(); q];
        if !lp.is_active(i) {
            e[i] = Rational::from_integer(1.into());
            eq.push(e);
        } else if !pos.contains(&i) {
            e[i] = -Rational::from_integer(1.into());
            ineq.push(e);
        }
    }
    PolyCone::from_h(q, ineq, eq).expect("rows have length q")
}

pub(crate) fn critical_normal_at(
    lp: &LowerPoint,
    y_star: &[Rational],
    v: &[Rational],
    lambda: &[Rational],
) -> Result<PolyCone<Rational>, Error> {
    if v.len() != lp.m() || lambda.len() != lp.q() {
        return Err(Error::DimensionMismatch("direction or multiplier length".into()));
    }
    if !critical_cone_a(lp, y_star).contains(v) {
        return Err(Error::DirectionNotCritical);
    }
    if !lp.multiplier_polyhedron(y_star).contains(lambda) {
        return Err(Error::NoMultiplier);
    }
    let gt = lp.grads.transpose();
    Ok(mu_cone(lp, v, &positive_support(lambda)).linear_image(&gt))
}

/// `N_{K(y,y*)}(v)` as the image `∇g(y)ᵀ{μ : …}` built from `λ`.
pub fn critical_normal_cone(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    v: &[Rational],
    lambda: &[Rational],
) -> Result<PolyCone<Rational>, Error> {
    critical_normal_at(&LowerPoint::new(p, y)?, y_star, v, lambda)
}

#[cfg(test)]
mod tests {
    use super::super::tests::pair;
    use super::*;
    use crate::exactmath::rational::{int, ints, rat};

    fn ystar() -> Vec<Rational> {
        ints(&[0, 0, 1])
    }

    #[test]
    fn critical_cone_is_plane() {
        let p = pair();
        let k = critical_cone(&p, &p.y, &ystar(), None).unwrap();
        let plane = PolyCone::from_h(3, vec![], vec![ints(&[0, 0, 1])]).unwrap();
        assert!(k.cone.same_set(&plane));
        assert!(k.agree);
        let k2 = critical_cone(&p, &p.y, &ystar(), Some(&[rat(1, 2), rat(1, 2)])).unwrap();
        assert!(k2.per_lambda.same_set(&plane));
    }

    #[test]
    fn zero_dual_gives_linearized_tangent() {
        let p = pair();
        let k = critical_cone(&p, &p.y, &ints(&[0, 0, 0]), None).unwrap();
        let t = PolyCone::from_h(3, vec![ints(&[0, 0, 1])], vec![]).unwrap();
        assert!(k.cone.same_set(&t));
    }

    #[test]
    fn directional_values() {
        let p = pair();
        let d = directional_multipliers(&p, &p.y, &ystar(), &ints(&[1, 0, 0])).unwrap();
        assert_eq!(d.theta, int(1));
        assert_eq!(d.face_vertices, vec![ints(&[1, 0])]);
        let d = directional_multipliers(&p, &p.y, &ystar(), &ints(&[0, 0, 0])).unwrap();
        assert_eq!(d.theta, int(0));
        assert_eq!(d.face_vertices.len(), 2);
        let d = directional_multipliers(&p, &p.y, &ystar(), &ints(&[1, 1, 0])).unwrap();
        assert_eq!(d.theta, int(1));
        assert_eq!(d.face_vertices.len(), 2);
        assert!(matches!(
            directional_multipliers(&p, &p.y, &ystar(), &ints(&[0, 0, 1])),
            Err(Error::DirectionNotCritical)
        ));
    }

    #[test]
    fn normal_cone_of_critical_cone() {
        let p = pair();
        let v = ints(&[1, 0, 0]);
        let n = critical_normal_cone(&p, &p.y, &ystar(), &v, &ints(&[1, 0])).unwrap();
        let line = PolyCone::from_h(3, vec![], vec![ints(&[1, 0, 0]), ints(&[0, 1, 0])]).unwrap();
        assert!(n.same_set(&line));
        let k = critical_cone(&p, &p.y, &ystar(), None).unwrap().cone;
        assert!(n.same_set(&k.polar().with_eq(v.clone())));
        let n2 = critical_normal_cone(&p, &p.y, &ystar(), &v, &ints(&[0, 1])).unwrap();
        assert!(n.same_set(&n2));
        let n0 = critical_normal_cone(&p, &p.y, &ystar(), &ints(&[0, 0, 0]), &ints(&[1, 0])).unwrap();
        assert!(n0.same_set(&k.polar()));
    }
}
