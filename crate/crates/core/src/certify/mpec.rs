//! The MSCQ certifier for the MPEC system `0 ∈ φ(x,y) + N̂_Γ(y)`, `G(x,y) ≤ 0`.
//!
//! Phase I proves the sufficient condition: for every extreme multiplier λ̂
//! the joint form `ψ(w,η) = wᵀ(∇_yφ + ∇²(λ̂ᵀg))w − ηᵀ∇_yG w` must be positive on
//! `C(λ̂) = {(w,η) : ∇g_i w = 0 (i ∈ I⁺(λ̂)), η ∈ N_{ℝ^p₋}(G), ∇_xφᵀw = ∇_xGᵀη}`
//! wherever `w ≠ 0`. Dropping the (u,v)-conditions only strengthens what is
//! checked, so POSITIVE everywhere certifies MSCQ.
//!
//! Phase II searches for a complete violating tuple `(u,v,λ,η,w)` cell by
//! cell (η-support `Y`, zero pattern `Z` of `∇g v`) and accepts only tuples
//! that pass [`verify_witness`]. Such a tuple refutes the sufficient
//! condition, not MSCQ.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::inequality::{mscq_cascade, IneqSystem};
use super::quadform::{certificate_json, quadratic_form_sign_on_cone, QuadFormQuery, QuadSign};
use super::verdict::CqVerdict;
use super::Limits;
use crate::exactmath::matrix::{linear_basis, Matrix};
use crate::exactmath::rational::{mat_json, vec_json};
use crate::exactmath::scalar::{dot, Scalar};
use crate::lowerlevel::{
    graph_tangent_member, multiplier_set, positive_support, directional_multipliers, LowerPoint,
};
use crate::model::{validate_point, MpecProblem};
use crate::polyhedra::PolyCone;
use crate::{Error, Rational};

fn one() -> Rational {
    Rational::from_integer(1.into())
}

/// First-order data at `(x̄, ȳ)`.
struct MpecPoint {
    n: usize,
    m: usize,
    p: usize,
    q: usize,
    y_star: Vec<Rational>,
    jx_phi: Matrix<Rational>,
    jy_phi: Matrix<Rational>,
    jx_g: Matrix<Rational>,
    jy_g: Matrix<Rational>,
    g_active: Vec<usize>,
    lower: LowerPoint,
}

impl MpecPoint {
    fn new(p: &MpecProblem) -> Result<Self, Error> {
        let z = p.zbar();
        let gv = MpecProblem::eval_all(&p.big_g, &z);
        if let Some(k) = gv.iter().position(|v| v.is_positive()) {
            return Err(Error::InfeasiblePoint(format!("G{}(x,y) = {} > 0", k + 1, gv[k])));
        }
        Ok(MpecPoint {
            n: p.n,
            m: p.m,
            p: p.p,
            q: p.q,
            y_star: p.y_star(),
            jx_phi: MpecProblem::jacobian(&p.phi, &z, p.xs()),
            jy_phi: MpecProblem::jacobian(&p.phi, &z, p.ys()),
            jx_g: MpecProblem::jacobian(&p.big_g, &z, p.xs()),
            jy_g: MpecProblem::jacobian(&p.big_g, &z, p.ys()),
            g_active: (0..p.p).filter(|&k| gv[k].is_zero()).collect(),
            lower: LowerPoint::new(p, &p.y)?,
        })
    }

    /// `ψ` as a symmetric (m+p)×(m+p) matrix in `(w, η)`.
    fn psi_matrix(&self, lambda: &[Rational]) -> Matrix<Rational> {
        let (m, p) = (self.m, self.p);
        let a = self.lower.hess_lag(lambda);
        let half = Rational::new(1.into(), 2.into());
        let mut q = Matrix::<Rational>::zeros(m + p, m + p);
        for i in 0..m {
            for j in 0..m {
                let s = self.jy_phi[(i, j)].clone() + a[(i, j)].clone();
                let t = self.jy_phi[(j, i)].clone() + a[(j, i)].clone();
                q[(i, j)] = (s + t) * half.clone();
            }
        }
        for k in 0..p {
            for j in 0..m {
                let c = -(self.jy_g[(k, j)].clone() * half.clone());
                q[(j, m + k)] = c.clone();
                q[(m + k, j)] = c;
            }
        }
        q
    }

    fn psi(&self, lambda: &[Rational], w: &[Rational], eta: &[Rational]) -> Rational {
        let a = self.lower.hess_lag(lambda);
        let mut t = dot(w, &self.jy_phi.mul_vec(w)) + dot(w, &a.mul_vec(w));
        t -= dot(eta, &self.jy_g.mul_vec(w));
        t
    }

    /// `C(λ̂)` restricted to η supported on `support`.
    fn w_eta_cone(&self, lambda: &[Rational], support: &[usize]) -> PolyCone<Rational> {
        let (m, p, n) = (self.m, self.p, self.n);
        let d = m + p;
        let mut ineq = Vec::new();
        let mut eq = Vec::new();
        for i in positive_support(lambda) {
            let mut r = self.lower.grads.row(i).to_vec();
            r.resize(d, Rational::zero());
            eq.push(r);
        }
        for k in 0..p {
            let mut e = vec![Rational::zero(); d];
            if support.contains(&k) {
                e[m + k] = -one();
                ineq.push(e);
            } else {
                e[m + k] = one();
                eq.push(e);
            }
        }
        // ∇_xφᵀw − ∇_xGᵀη = 0, one row per x-coordinate
        for c in 0..n {
            let mut r: Vec<Rational> = self.jx_phi.column(c);
            r.extend(self.jx_g.column(c).into_iter().map(|v| -v));
            eq.push(r);
        }
        PolyCone::from_h(d, ineq, eq).expect("rows have length m+p")
    }

    fn w_qualifier(&self) -> Vec<Vec<Rational>> {
        Matrix::<Rational>::identity(self.m + self.p).row_vecs().into_iter().take(self.m).collect()
    }

    /// `∇G_k(x̄,ȳ)(u,v)`.
    fn big_g_dir(&self, k: usize, u: &[Rational], v: &[Rational]) -> Rational {
        dot(self.jx_g.row(k), u) + dot(self.jy_g.row(k), v)
    }
}

/// `(EqNonDegG)`: `∇_xGᵀη = 0, η ∈ N_{ℝ^p₋}(G) ⟹ ∇_yGᵀη = 0`, checked on the
/// generators of the η-cone.
pub fn nondeg_g_check(p: &MpecProblem) -> Result<CqVerdict, Error> {
    let mp = MpecPoint::new(p)?;
    nondeg_at(&mp)
}

fn nondeg_at(mp: &MpecPoint) -> Result<CqVerdict, Error> {
    let pdim = mp.p;
    let mut ineq = Vec::new();
    let mut eq: Vec<Vec<Rational>> = (0..mp.n).map(|c| mp.jx_g.column(c)).collect();
    for k in 0..pdim {
        let mut e = vec![Rational::zero(); pdim];
        if mp.g_active.contains(&k) {
            e[k] = -one();
            ineq.push(e);
        } else {
            e[k] = one();
            eq.push(e);
        }
    }
    let cone = PolyCone::from_h(pdim, ineq, eq)?;
    for eta in cone.rays().iter().chain(cone.lineality()) {
        if mp.jy_g.transpose().mul_vec(eta).iter().any(|x| !x.is_zero()) {
            return Ok(CqVerdict::fails("nondeg_g", "non-degeneracy of G", vec![("eta", eta.clone())]));
        }
    }
    Ok(CqVerdict::holds("nondeg_g", json!({"eta_generators": mat_json(cone.rays())})))
}

/// Per-condition report for a candidate tuple `(u, v, λ, η, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub uv_nonzero: bool,
    pub w_nonzero: bool,
    pub lambda_extreme: bool,
    pub lambda_directional: bool,
    pub ms1: bool,
    pub ms2: bool,
    pub ms3: bool,
    pub ms4: bool,
    pub psi: Rational,
    pub valid: bool,
}

impl WitnessReport {
    pub fn to_json(&self) -> Value {
        json!({
            "uv_nonzero": self.uv_nonzero,
            "w_nonzero": self.w_nonzero,
            "lambda_extreme": self.lambda_extreme,
            "lambda_directional": self.lambda_directional,
            "upper_tangent": self.ms1,
            "graph_tangent": self.ms2,
            "adjoint_equation": self.ms3,
            "second_order": self.ms4,
            "psi": self.psi.to_string(),
            "valid": self.valid,
        })
    }
}

/// Exact check of every condition of the sufficient condition for one tuple.
pub fn verify_witness(
    p: &MpecProblem,
    u: &[Rational],
    v: &[Rational],
    lambda: &[Rational],
    eta: &[Rational],
    w: &[Rational],
) -> Result<WitnessReport, Error> {
    if u.len() != p.n || v.len() != p.m || lambda.len() != p.q || eta.len() != p.p || w.len() != p.m {
        return Err(Error::DimensionMismatch("witness component lengths".into()));
    }
    let mp = MpecPoint::new(p)?;
    let nz = |x: &[Rational]| x.iter().any(|c| !c.is_zero());
    let uv_nonzero = nz(u) || nz(v);
    let w_nonzero = nz(w);

    let ms = multiplier_set(p, &p.y, &mp.y_star)?;
    let support = positive_support(lambda);
    let lambda_extreme = ms.contains(lambda) && linear_basis(&mp.lower.grads.select_rows(&support)).row_independent;
    let lambda_directional = match directional_multipliers(p, &p.y, &mp.y_star, v) {
        Ok(d) => d.face.contains(lambda),
        Err(_) => false,
    };

    let ms1 = mp.g_active.iter().all(|&k| !mp.big_g_dir(k, u, v).is_positive());

    let v_star: Vec<Rational> = mp
        .jx_phi
        .mul_vec(u)
        .iter()
        .zip(mp.jy_phi.mul_vec(v))
        .map(|(a, b)| -(a.clone() + b))
        .collect();
    let ms2 = graph_tangent_member(p, &p.y, &mp.y_star, v, &v_star)?.member;

    let adj: Vec<Rational> = mp
        .jx_phi
        .tr_mul_vec(w)
        .iter()
        .zip(mp.jx_g.tr_mul_vec(eta))
        .map(|(a, b)| b - a)
        .collect();
    let eta_normal = (0..p.p).all(|k| {
        if mp.g_active.contains(&k) {
            !eta[k].is_negative()
        } else {
            eta[k].is_zero()
        }
    });
    let comp: Rational = (0..p.p).map(|k| eta[k].clone() * mp.big_g_dir(k, u, v)).sum();
    let ms3 = adj.iter().all(Zero::is_zero) && eta_normal && comp.is_zero();

    let psi = mp.psi(lambda, w, eta);
    let ms4 = support.iter().all(|&i| dot(mp.lower.grads.row(i), w).is_zero()) && !psi.is_positive();

    let valid = uv_nonzero && w_nonzero && lambda_extreme && lambda_directional && ms1 && ms2 && ms3 && ms4;
    Ok(WitnessReport { uv_nonzero, w_nonzero, lambda_extreme, lambda_directional, ms1, ms2, ms3, ms4, psi, valid })
}

/// Options for [`certify_mscq_mpec`].
#[derive(Clone, Debug, Default)]
pub struct CertifyOptions {
    pub limits: Limits,
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..1usize << items.len())
        .map(|mask| (0..items.len()).filter(|k| mask >> k & 1 == 1).map(|k| items[k]).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// The `(u, v, μ)` cone of one Phase II cell, in ℝ^{n+m+q}.
fn uv_cell(mp: &MpecPoint, lambda: &[Rational], y_set: &[usize], z_set: &[usize]) -> PolyCone<Rational> {
    let (n, m, q) = (mp.n, mp.m, mp.q);
    let d = n + m + q;
    let pos = positive_support(lambda);
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for &k in &mp.g_active {
        let mut r: Vec<Rational> = mp.jx_g.row(k).iter().chain(mp.jy_g.row(k)).cloned().collect();
        r.resize(d, Rational::zero());
        if y_set.contains(&k) {
            eq.push(r);
        } else {
            ineq.push(r);
        }
    }
    let mut ys = vec![Rational::zero(); n];
    ys.extend(mp.y_star.iter().cloned());
    ys.resize(d, Rational::zero());
    eq.push(ys);
    for i in 0..q {
        let mut gv = vec![Rational::zero(); n];
        gv.extend(mp.lower.grads.row(i).iter().cloned());
        gv.resize(d, Rational::zero());
        let mut e = vec![Rational::zero(); d];
        e[n + m + i] = one();
        if !mp.lower.is_active(i) {
            eq.push(e);
        } else if pos.contains(&i) {
            eq.push(gv);
        } else if z_set.contains(&i) {
            eq.push(gv);
            e[n + m + i] = -one();
            ineq.push(e);
        } else {
            ineq.push(gv);
            eq.push(e);
        }
    }
    // −∇_xφ u − ∇_yφ v − H_v... : row j of −∇_xφ u − (∇_yφ + ∇²(λᵀg)) v − ∇gᵀμ = 0
    let h = mp.lower.hess_lag(lambda);
    for j in 0..m {
        let mut r: Vec<Rational> = mp.jx_phi.row(j).iter().map(|x| -x.clone()).collect();
        r.extend((0..m).map(|c| -(mp.jy_phi[(j, c)].clone() + h[(j, c)].clone())));
        r.extend((0..q).map(|i| -mp.lower.grads[(i, j)].clone()));
        eq.push(r);
    }
    PolyCone::from_h(d, ineq, eq).expect("rows have length n+m+q")
}

fn uv_candidates(cone: &PolyCone<Rational>, n: usize, m: usize) -> Vec<(Vec<Rational>, Vec<Rational>)> {
    let mut pts: Vec<Vec<Rational>> = Vec::new();
    for l in cone.lineality() {
        pts.push(l.clone());
        pts.push(l.iter().map(|x| -x.clone()).collect());
    }
    pts.extend(cone.rays().iter().cloned());
    pts.push(cone.relint_point());
    let mut out: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
    for mut x in pts {
        x.truncate(n + m);
        if x.iter().all(Zero::is_zero) {
            continue;
        }
        Rational::normalize_direction(&mut x);
        let v = x.split_off(n);
        if !out.iter().any(|(a, b)| *a == x && *b == v) {
            out.push((x, v));
        }
    }
    out
}

/// MSCQ for the MPEC system at `(x̄, ȳ)`.
pub fn certify_mscq_mpec(p: &MpecProblem, opts: &CertifyOptions) -> Result<CqVerdict, Error> {
    let report = validate_point(p);
    if !report.g_ok || !report.big_g_ok {
        return Err(Error::PrerequisiteFailed("reference point violates g ≤ 0 or G ≤ 0".into()));
    }
    if !report.multipliers_exist {
        return Err(Error::NoMultiplier);
    }
    let limits = &opts.limits;
    let mp = MpecPoint::new(p)?;

    let ys: Vec<usize> = p.ys().collect();
    let g_y = p.g.iter().map(|g| g.select_vars(&ys).expect("g depends on y only")).collect();
    let lower_sys = IneqSystem::new(g_y, p.y.clone())?;
    let upper_sys = IneqSystem::new(p.big_g.clone(), p.zbar())?;
    let prereqs = vec![
        ("lower_level_mscq".to_string(), mscq_cascade(&lower_sys, limits)?),
        ("upper_level_mscq".to_string(), mscq_cascade(&upper_sys, limits)?),
        ("nondegenerate_G".to_string(), nondeg_at(&mp)?),
    ];
    if let Some((name, _)) = prereqs.iter().find(|(_, v)| !v.is_holds()) {
        let mut v = CqVerdict::unknown("mpec", format!("prerequisite {name} not certified"));
        v.prerequisites = prereqs;
        return Ok(v);
    }

    let ms = multiplier_set(p, &p.y, &mp.y_star)?;
    let all_g: Vec<usize> = mp.g_active.clone();
    let phase1: Vec<QuadSign> = ms
        .extreme
        .par_iter()
        .map(|lam| {
            let cone = mp.w_eta_cone(lam, &all_g);
            let query = QuadFormQuery {
                depth: limits.depth,
                max_cells: limits.max_cells,
                ..QuadFormQuery::new(mp.psi_matrix(lam), cone.rays().to_vec(), cone.lineality().to_vec())
            }
            .with_qualifier(mp.w_qualifier());
            quadratic_form_sign_on_cone(&query)
        })
        .collect();

    if phase1.iter().all(|s| matches!(s, QuadSign::Positive(_))) {
        let per: Vec<Value> = ms
            .extreme
            .iter()
            .zip(&phase1)
            .map(|(l, s)| match s {
                QuadSign::Positive(c) => json!({"lambda": vec_json(l), "sign": "POSITIVE", "proof": certificate_json(c)}),
                _ => unreachable!(),
            })
            .collect();
        let mut v = CqVerdict::holds("mpec_phase1", json!({"extreme_multipliers": per}));
        v.prerequisites = prereqs;
        return Ok(v);
    }

    let diag: Vec<Value> = ms
        .extreme
        .iter()
        .zip(&phase1)
        .map(|(l, s)| {
            let detail = match s {
                QuadSign::Witness(x) => json!({"w": vec_json(&x[..mp.m]), "eta": vec_json(&x[mp.m..])}),
                QuadSign::Unknown(r) => json!(r),
                QuadSign::Positive(_) => Value::Null,
            };
            json!({"lambda": vec_json(l), "result": s.label(), "detail": detail})
        })
        .collect();

    let mut cells = 0usize;
    for lam in &ms.extreme {
        let pos = positive_support(lam);
        let free: Vec<usize> = mp.lower.active.iter().copied().filter(|i| !pos.contains(i)).collect();
        for y_set in subsets(&mp.g_active) {
            cells += 1;
            if cells > limits.max_cells {
                let mut v = CqVerdict::unknown("mpec_phase2", format!("cell limit {} exhausted", limits.max_cells));
                v.prerequisites = prereqs;
                v.certificate = Some(json!({"phase1": diag}));
                return Ok(v);
            }
            let cone = mp.w_eta_cone(lam, &y_set);
            let query = QuadFormQuery {
                depth: limits.depth,
                max_cells: limits.max_cells,
                ..QuadFormQuery::new(mp.psi_matrix(lam), cone.rays().to_vec(), cone.lineality().to_vec())
            }
            .with_qualifier(mp.w_qualifier());
            let QuadSign::Witness(x) = quadratic_form_sign_on_cone(&query) else { continue };
            let (w, eta) = (x[..mp.m].to_vec(), x[mp.m..].to_vec());
            for z_set in subsets(&free) {
                cells += 1;
                for (u, v) in uv_candidates(&uv_cell(&mp, lam, &y_set, &z_set), mp.n, mp.m) {
                    let rep = verify_witness(p, &u, &v, lam, &eta, &w)?;
                    if rep.valid {
                        let mut verdict = CqVerdict::fails(
                            "mpec_phase2",
                            "sufficient condition",
                            vec![("u", u), ("v", v), ("lambda", lam.clone()), ("eta", eta), ("w", w)],
                        );
                        verdict.reason = Some(format!("violating tuple found; psi = {}", rep.psi));
                        verdict.prerequisites = prereqs;
                        verdict.certificate = Some(json!({"phase1": diag, "check": rep.to_json()}));
                        return Ok(verdict);
                    }
                }
            }
        }
    }
    let mut v = CqVerdict::unknown("mpec_phase2", format!("no verified violating tuple in {cells} cells"));
    v.prerequisites = prereqs;
    v.certificate = Some(json!({"phase1": diag}));
    Ok(v)
}
