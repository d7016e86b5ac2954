//! Constraint qualifications for inequality systems `P(z) ≤ 0`.

use num_traits::{Signed, Zero};
use serde_json::json;

use super::quadform::{certificate_json, quadratic_form_sign_on_cone, QuadFormQuery, QuadSign};
use super::verdict::CqVerdict;
use super::Limits;
use crate::exactmath::lp::{lp_solve, LpOutcome, LpProblem, Sense};
use crate::exactmath::matrix::Matrix;
use crate::exactmath::rational::mat_json;
use crate::exactmath::scalar::{dot, Scalar};
use crate::model::{MpecProblem, Poly};
use crate::polyhedra::PolyCone;
use crate::{Error, Rational};

/// `P(z) ≤ 0` at a reference point `z̄`.
#[derive(Clone, Debug)]
pub struct IneqSystem {
    pub polys: Vec<Poly>,
    pub point: Vec<Rational>,
}

impl IneqSystem {
    pub fn new(polys: Vec<Poly>, point: Vec<Rational>) -> Result<Self, Error> {
        if let Some(p) = polys.iter().find(|p| p.nvars() != point.len()) {
            return Err(Error::DimensionMismatch(format!(
                "polynomial in {} variables at a point of dimension {}",
                p.nvars(),
                point.len()
            )));
        }
        Ok(IneqSystem { polys, point })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn values(&self) -> Vec<Rational> {
        MpecProblem::eval_all(&self.polys, &self.point)
    }

    /// Active rows; `INFEASIBLE_POINT` if some `P_i(z̄) > 0`.
    pub fn active(&self) -> Result<Vec<usize>, Error> {
        let v = self.values();
        if let Some(i) = v.iter().position(|x| x.is_positive()) {
            return Err(Error::InfeasiblePoint(format!("P{}(z) = {} > 0", i + 1, v[i])));
        }
        Ok((0..v.len()).filter(|&i| v[i].is_zero()).collect())
    }

    pub fn jacobian(&self) -> Matrix<Rational> {
        MpecProblem::jacobian(&self.polys, &self.point, 0..self.dim())
    }

    /// `∇²(λᵀP)(z̄)`.
    pub fn hess_lag(&self, lambda: &[Rational]) -> Matrix<Rational> {
        let d = self.dim();
        let mut h = Matrix::<Rational>::zeros(d, d);
        for (p, l) in self.polys.iter().zip(lambda) {
            if l.is_zero() {
                continue;
            }
            for a in 0..d {
                let pa = p.differentiate(a);
                for b in 0..d {
                    let v = pa.differentiate(b).evaluate(&self.point);
                    h[(a, b)] = h[(a, b)].clone() + l.clone() * v;
                }
            }
        }
        h
    }

    /// `T^lin(z̄) = {w : ∇P_i(z̄)w ≤ 0, i active}`.
    pub fn linearized_cone(&self, active: &[usize], jac: &Matrix<Rational>) -> PolyCone<Rational> {
        let rows = active.iter().map(|&i| jac.row(i).to_vec()).collect();
        PolyCone::from_h(self.dim(), rows, Vec::new()).expect("jacobian rows have the point's dimension")
    }
}

/// A nonzero `λ ≥ 0` supported on `allowed` with `∇Pᵀλ = 0`, if one exists
/// (LP: maximize `Σλ` subject to `Σλ ≤ 1`).
pub(crate) fn abnormal_multiplier(jac: &Matrix<Rational>, allowed: &[usize]) -> Result<Option<Vec<Rational>>, Error> {
    let s = jac.nrows();
    let one = Rational::from_integer(1.into());
    let mut lp = LpProblem::with_objective(vec![one.clone(); s], Sense::Max);
    for j in 0..jac.ncols() {
        lp.add_eq(jac.column(j), Rational::zero());
    }
    for i in 0..s {
        if allowed.contains(&i) {
            lp.nonneg(i);
        } else {
            lp.fix_zero(i);
        }
    }
    lp.add_le(vec![one; s], Rational::from_integer(1.into()));
    match lp_solve(&lp)? {
        LpOutcome::Optimal { primal, value, .. } if value.is_positive() => {
            let mut l = primal;
            Rational::normalize_direction(&mut l);
            Ok(Some(l))
        }
        _ => Ok(None),
    }
}

pub fn nnamcq_check(sys: &IneqSystem) -> Result<CqVerdict, Error> {
    let active = sys.active()?;
    let jac = sys.jacobian();
    Ok(match abnormal_multiplier(&jac, &active)? {
        None => CqVerdict::holds("nnamcq", json!({"abnormal_lp_optimum": "0"})),
        Some(l) => CqVerdict::fails("nnamcq", "NNAMCQ", vec![("lambda", l)]),
    })
}

/// A nonzero point in the relative interior of a cone: the sum of its rays,
/// or a lineality vector when it has none.
pub(crate) fn nonzero_relint(c: &PolyCone<Rational>) -> Option<Vec<Rational>> {
    let s = c.relint_point();
    if s.iter().any(|x| !x.is_zero()) {
        return Some(s);
    }
    c.lineality().first().cloned()
}

pub fn foscms_check(sys: &IneqSystem, limits: &Limits) -> Result<CqVerdict, Error> {
    let active = sys.active()?;
    let jac = sys.jacobian();
    let t = sys.linearized_cone(&active, &jac);
    if t.is_zero() {
        return Ok(CqVerdict::holds("foscms", json!({"kind": "strong_metric_subregularity", "linearized_cone": "{0}"})));
    }
    if active.len() >= 63 || (1usize << active.len()) > limits.max_cells {
        return Ok(CqVerdict::unknown("foscms", format!("{} active rows exceed the face limit", active.len())));
    }
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for mask in 0..1usize << active.len() {
        let mut face = t.clone();
        for (k, &i) in active.iter().enumerate() {
            if mask >> k & 1 == 1 {
                face = face.with_eq(jac.row(i).to_vec());
            }
        }
        let Some(w) = nonzero_relint(&face) else { continue };
        let tight: Vec<usize> = active.iter().copied().filter(|&i| dot(jac.row(i), &w).is_zero()).collect();
        if seen.contains(&tight) {
            continue;
        }
        seen.push(tight.clone());
        if let Some(l) = abnormal_multiplier(&jac, &tight)? {
            let mut w = w;
            Rational::normalize_direction(&mut w);
            return Ok(CqVerdict::fails("foscms", "FOSCMS (sufficient condition)", vec![("w", w), ("lambda", l)]));
        }
    }
    Ok(CqVerdict::holds("foscms", json!({"kind": "facewise_trivial_abnormal_cone", "faces": seen.len()})))
}

pub fn soscms_check(sys: &IneqSystem, limits: &Limits) -> Result<CqVerdict, Error> {
    let active = sys.active()?;
    let jac = sys.jacobian();
    let s = sys.polys.len();
    let mut ineq = Vec::new();
    let mut eq: Vec<Vec<Rational>> = (0..jac.ncols()).map(|j| jac.column(j)).collect();
    for i in 0..s {
        let mut e = vec![Rational::zero(); s];
        if active.contains(&i) {
            e[i] = -Rational::from_integer(1.into());
            ineq.push(e);
        } else {
            e[i] = Rational::from_integer(1.into());
            eq.push(e);
        }
    }
    let abnormal = PolyCone::from_h(s, ineq, eq)?;
    if abnormal.is_zero() {
        return Ok(CqVerdict::holds("soscms", json!({"kind": "trivial_abnormal_cone"})));
    }
    let t = sys.linearized_cone(&active, &jac);
    let mut unknown = Vec::new();
    let mut per_ray = Vec::new();
    for ray in abnormal.rays() {
        let h = sys.hess_lag(ray);
        let neg = Matrix::from_rows_unchecked(h.ncols(), h.row_vecs().into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect());
        let query = QuadFormQuery { depth: limits.depth, max_cells: limits.max_cells, ..QuadFormQuery::new(neg, t.rays().to_vec(), t.lineality().to_vec()) };
        match quadratic_form_sign_on_cone(&query) {
            QuadSign::Positive(c) => per_ray.push(json!({"ray": mat_json(std::slice::from_ref(ray)), "proof": certificate_json(&c)})),
            QuadSign::Witness(w) => {
                return Ok(CqVerdict::fails("soscms", "SOSCMS (sufficient condition)", vec![("lambda", ray.clone()), ("w", w)]));
            }
            QuadSign::Unknown(r) => unknown.push(r),
        }
    }
    if unknown.is_empty() {
        Ok(CqVerdict::holds("soscms", json!({"kind": "negative_curvature_on_abnormal_rays", "rays": per_ray})))
    } else {
        Ok(CqVerdict::unknown("soscms", unknown.join("; ")))
    }
}

/// LINEAR → NNAMCQ → FOSCMS → SOSCMS; the first HOLDS decides. Failures of
/// the sufficient conditions never refute MSCQ, so the fallback is UNKNOWN.
pub fn mscq_cascade(sys: &IneqSystem, limits: &Limits) -> Result<CqVerdict, Error> {
    sys.active()?;
    if sys.polys.iter().all(|p| p.degree() <= 1) {
        return Ok(CqVerdict::holds("linear", json!({"kind": "affine_system"})));
    }
    let mut subs = Vec::new();
    for check in [nnamcq_check as fn(&IneqSystem) -> Result<CqVerdict, Error>] {
        let v = check(sys)?;
        if v.is_holds() {
            return Ok(wrap(v, subs));
        }
        subs.push(v);
    }
    for check in [foscms_check as fn(&IneqSystem, &Limits) -> Result<CqVerdict, Error>, soscms_check] {
        let v = check(sys, limits)?;
        if v.is_holds() {
            return Ok(wrap(v, subs));
        }
        subs.push(v);
    }
    let mut v = CqVerdict::unknown("cascade", "no sufficient condition certified MSCQ");
    v.subresults = subs;
    Ok(v)
}

fn wrap(mut decided: CqVerdict, earlier: Vec<CqVerdict>) -> CqVerdict {
    decided.subresults = earlier;
    decided
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::verdict::Status;
    use crate::exactmath::rational::ints;
    use crate::model::parse_expr;

    fn sys(exprs: &[&str], point: &[i64]) -> IneqSystem {
        let d = point.len();
        let names: Vec<String> = (1..=d).map(|i| format!("z{i}")).collect();
        let polys = exprs
            .iter()
            .map(|e| parse_expr(e).unwrap().to_poly(d, &|v| names.iter().position(|w| w == v)).unwrap())
            .collect();
        IneqSystem::new(polys, ints(point)).unwrap()
    }

    #[test]
    fn nnamcq_cases() {
        let pair = sys(&["z3 + 1/2*z1^2", "z3 + 1/2*z2^2"], &[0, 0, 0]);
        assert_eq!(nnamcq_check(&pair).unwrap().status, Status::Holds);
        let v = nnamcq_check(&sys(&["z1", "-z1"], &[0, 0])).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.witness("lambda"), Some(&ints(&[1, 1])[..]));
        assert!(nnamcq_check(&sys(&["z1"], &[0])).unwrap().is_holds());
        assert!(matches!(nnamcq_check(&sys(&["z1 + 1"], &[0])), Err(Error::InfeasiblePoint(_))));
    }

    #[test]
    fn foscms_cases() {
        let l = Limits::default();
        assert!(foscms_check(&sys(&["z1 + z2", "z1 - z2"], &[0, 0]), &l).unwrap().is_holds());
        let v = foscms_check(&sys(&["z1", "-z1"], &[0, 0]), &l).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.witness("lambda"), Some(&ints(&[1, 1])[..]));
        assert_eq!(v.witness("w"), Some(&ints(&[0, 1])[..]));
        assert!(foscms_check(&sys(&["z1^2 - 1"], &[0]), &l).unwrap().is_holds());
    }

    #[test]
    fn soscms_cases() {
        let l = Limits::default();
        assert!(soscms_check(&sys(&["-z1^2 - z2^2"], &[0, 0]), &l).unwrap().is_holds());
        let v = soscms_check(&sys(&["z1^2"], &[0]), &l).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.witness("lambda"), Some(&ints(&[1])[..]));
        assert_eq!(v.witness("w"), Some(&ints(&[1])[..]));
        assert_eq!(soscms_check(&sys(&["z1", "-z1"], &[0, 0]), &l).unwrap().status, Status::Fails);
    }

    #[test]
    fn cascade_order() {
        let l = Limits::default();
        assert_eq!(mscq_cascade(&sys(&["z1", "-z1"], &[0, 0]), &l).unwrap().method, "linear");
        let v = mscq_cascade(&sys(&["z3 + 1/2*z1^2", "z3 + 1/2*z2^2"], &[0, 0, 0]), &l).unwrap();
        assert_eq!((v.status, v.method.as_str()), (Status::Holds, "nnamcq"));
        let v = mscq_cascade(&sys(&["z1^2"], &[0]), &l).unwrap();
        assert_eq!(v.status, Status::Unknown);
        assert_eq!(v.subresults.len(), 3);
    }
}
