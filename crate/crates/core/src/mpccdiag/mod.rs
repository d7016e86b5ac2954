//! Diagnostics for the MPCC reformulation `Ω̃` at a chosen multiplier λ̄:
//! index sets, branch-wise MPCC-MFCQ, MPCC-LICQ, the MPEC linearized cone,
//! W-/M-stationarity and numerical evidence for a tangent-cone gap.
//!
//! All vectors of `Ω̃` live in `w = (x, y, λ)` of dimension `n + m + q`.
//! Index sets are 0-based in the API and 1-based in JSON.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::certify::{CqVerdict, Status};
use crate::exactmath::lp::{lp_solve, LpOutcome, LpProblem, Sense};
use crate::exactmath::matrix::{linear_basis, Matrix};
use crate::exactmath::rational::vec_json;
use crate::exactmath::scalar::{to_f64_vec, unit};
use crate::lowerlevel::{min_norm_multiplier, multiplier_set};
use crate::model::{build_mpcc, MpecProblem};
use crate::oracle::{dist_mpcc, sample_seed, ProbeOptions, ProbeReport};
use crate::polyhedra::{DisjunctiveSet, Polyhedron, Row};
use crate::{Error, Rational};

fn one() -> Rational {
    Rational::from_integer(1.into())
}

fn idx_json(v: &[usize]) -> Value {
    json!(v.iter().map(|i| i + 1).collect::<Vec<_>>())
}

/// `(x̄, ȳ, λ̄)` with the index sets of `Ω̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpccPoint {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
    pub lambda: Vec<Rational>,
    /// `g_i = 0, λ̄_i > 0`
    pub i_g: Vec<usize>,
    /// `g_i < 0, λ̄_i = 0`
    pub i_lambda: Vec<usize>,
    /// `g_i = 0, λ̄_i = 0` (biactive)
    pub i_0: Vec<usize>,
    /// `G_k = 0`
    pub i_big_g: Vec<usize>,
}

impl MpccPoint {
    pub fn w(&self) -> Vec<Rational> {
        self.x.iter().chain(&self.y).chain(&self.lambda).cloned().collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "x": vec_json(&self.x),
            "y": vec_json(&self.y),
            "lambda": vec_json(&self.lambda),
            "I_g": idx_json(&self.i_g),
            "I_lambda": idx_json(&self.i_lambda),
            "I_0": idx_json(&self.i_0),
            "I_G": idx_json(&self.i_big_g),
        })
    }
}

/// Index sets at `(x̄, ȳ, λ̄)`; errors unless the triple lies in `Ω̃` exactly.
pub fn mpcc_index_sets(p: &MpecProblem, lambda: &[Rational]) -> Result<MpccPoint, Error> {
    if lambda.len() != p.q {
        return Err(Error::DimensionMismatch(format!("λ has {} entries, expected {}", lambda.len(), p.q)));
    }
    let z = p.zbar();
    let gv = MpecProblem::eval_all(&p.g, &z);
    let bg = MpecProblem::eval_all(&p.big_g, &z);
    if let Some(i) = (0..p.q).find(|&i| gv[i].is_positive()) {
        return Err(Error::InfeasiblePoint(format!("g{}(y) = {} > 0", i + 1, gv[i])));
    }
    if let Some(k) = (0..p.p).find(|&k| bg[k].is_positive()) {
        return Err(Error::InfeasiblePoint(format!("G{}(x,y) = {} > 0", k + 1, bg[k])));
    }
    if let Some(i) = (0..p.q).find(|&i| lambda[i].is_negative()) {
        return Err(Error::InfeasiblePoint(format!("λ{} < 0", i + 1)));
    }
    if let Some(i) = (0..p.q).find(|&i| gv[i].is_negative() && !lambda[i].is_zero()) {
        return Err(Error::InfeasiblePoint(format!("complementarity fails for index {}", i + 1)));
    }
    let mut w = z.clone();
    w.extend(lambda.iter().cloned());
    let h = build_mpcc(p).h_at(&w);
    if let Some(j) = h.iter().position(|v| !v.is_zero()) {
        return Err(Error::InfeasiblePoint(format!("h{}(x,y,λ) = {} ≠ 0", j + 1, h[j])));
    }
    let mut pt = MpccPoint {
        x: p.x.clone(),
        y: p.y.clone(),
        lambda: lambda.to_vec(),
        i_g: Vec::new(),
        i_lambda: Vec::new(),
        i_0: Vec::new(),
        i_big_g: (0..p.p).filter(|&k| bg[k].is_zero()).collect(),
    };
    for i in 0..p.q {
        match (gv[i].is_zero(), lambda[i].is_zero()) {
            (true, false) => pt.i_g.push(i),
            (false, _) => pt.i_lambda.push(i),
            (true, true) => pt.i_0.push(i),
        }
    }
    Ok(pt)
}

/// Whether `Λ(ȳ, ȳ*)` is a singleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Uniqueness {
    pub unique: bool,
    /// The ℓ1-minimal multiplier.
    pub reference: Vec<Rational>,
    /// A multiplier different from `reference` (vertex, or vertex + ray).
    pub second: Option<Vec<Rational>>,
    /// `[min λ_i, max λ_i]` over Λ; `None` for an unbounded maximum.
    pub ranges: Vec<(Rational, Option<Rational>)>,
}

impl Uniqueness {
    pub fn to_json(&self) -> Value {
        json!({
            "unique": self.unique,
            "reference": vec_json(&self.reference),
            "second": self.second.as_ref().map(|s| vec_json(s)),
            "ranges": self.ranges.iter().map(|(lo, hi)| json!([lo.to_string(), hi.as_ref().map(|h| h.to_string())])).collect::<Vec<_>>(),
        })
    }
}

/// Decides uniqueness by minimizing and maximizing every coordinate over Λ.
pub fn multiplier_uniqueness(p: &MpecProblem) -> Result<Uniqueness, Error> {
    let ys = p.y_star();
    let ms = multiplier_set(p, &p.y, &ys)?;
    if ms.is_empty() {
        return Err(Error::NoMultiplier);
    }
    let mut ranges = Vec::with_capacity(p.q);
    for i in 0..p.q {
        let c = unit::<Rational>(p.q, i);
        let lo = match lp_solve(&ms.set.to_lp(c.clone(), Sense::Min))? {
            LpOutcome::Optimal { value, .. } => value,
            _ => unreachable!("λ ≥ 0 bounds every coordinate below"),
        };
        let hi = match lp_solve(&ms.set.to_lp(c, Sense::Max))? {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        };
        ranges.push((lo, hi));
    }
    let unique = ranges.iter().all(|(lo, hi)| hi.as_ref() == Some(lo));
    let reference = min_norm_multiplier(p, &p.y, &ys)?;
    let second = if unique {
        None
    } else {
        ms.extreme
            .iter()
            .find(|e| **e != reference)
            .cloned()
            .or_else(|| ms.rays.first().map(|r| reference.iter().zip(r).map(|(a, b)| a + b).collect()))
    };
    Ok(Uniqueness { unique, reference, second, ranges })
}

/// A multiplier of Λ other than `lambda`, if any: the first extreme point
/// (lexicographically descending) that differs, or `lambda` plus a ray.
fn other_multiplier(p: &MpecProblem, lambda: &[Rational]) -> Result<Option<Vec<Rational>>, Error> {
    let ms = multiplier_set(p, &p.y, &p.y_star())?;
    if let Some(e) = ms.extreme.iter().find(|e| e.as_slice() != lambda) {
        return Ok(Some(e.clone()));
    }
    Ok(ms.rays.first().map(|r| lambda.iter().zip(r).map(|(a, b)| a + b).collect()))
}

/// Partition `(β1, β2)` of the biactive set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub beta1: Vec<usize>,
    pub beta2: Vec<usize>,
}

impl Branch {
    pub fn to_json(&self) -> Value {
        json!({"beta1": idx_json(&self.beta1), "beta2": idx_json(&self.beta2)})
    }
}

/// All `2^|I_0|` branches, `β1` ordered by size then lexicographically.
pub fn branches(pt: &MpccPoint) -> Vec<Branch> {
    let k = pt.i_0.len();
    let mut out: Vec<Branch> = (0..1usize << k)
        .map(|mask| {
            let (b1, b2): (Vec<usize>, Vec<usize>) = (0..k).partition(|j| mask >> j & 1 == 1);
            Branch { beta1: b1.iter().map(|&j| pt.i_0[j]).collect(), beta2: b2.iter().map(|&j| pt.i_0[j]).collect() }
        })
        .collect();
    out.sort_by(|a, b| a.beta1.len().cmp(&b.beta1.len()).then_with(|| a.beta1.cmp(&b.beta1)));
    out
}

/// Gradients in `w`-space at `(x̄, ȳ, λ̄)`.
struct Gradients {
    n: usize,
    m: usize,
    q: usize,
    /// `∇h_j`, m rows.
    h: Vec<Vec<Rational>>,
    /// `(0, ∇g_i, 0)`, q rows.
    g: Vec<Vec<Rational>>,
    /// `(∇G_k, 0)`, p rows.
    big_g: Vec<Vec<Rational>>,
}

impl Gradients {
    fn new(p: &MpecProblem, pt: &MpccPoint) -> Self {
        let sys = build_mpcc(p);
        let w = pt.w();
        let nw = sys.nvars();
        let h = MpecProblem::jacobian(&sys.h, &w, 0..nw).row_vecs();
        let g = MpecProblem::jacobian(&sys.pairs.iter().map(|(g, _)| g.clone()).collect::<Vec<_>>(), &w, 0..nw).row_vecs();
        let big_g = MpecProblem::jacobian(&sys.big_g, &w, 0..nw).row_vecs();
        Gradients { n: p.n, m: p.m, q: p.q, h, g, big_g }
    }

    fn dim(&self) -> usize {
        self.n + self.m + self.q
    }

    fn e_lambda(&self, i: usize) -> Vec<Rational> {
        unit(self.dim(), self.n + self.m + i)
    }

    /// The gradient family of the MPCC-MFCQ definition.
    fn family(&self, pt: &MpccPoint) -> Vec<Vec<Rational>> {
        let mut rows = self.h.clone();
        let mut gi: Vec<usize> = pt.i_g.iter().chain(&pt.i_0).copied().collect();
        gi.sort_unstable();
        rows.extend(gi.iter().map(|&i| self.g[i].clone()));
        let mut li: Vec<usize> = pt.i_lambda.iter().chain(&pt.i_0).copied().collect();
        li.sort_unstable();
        rows.extend(li.iter().map(|&i| self.e_lambda(i)));
        rows
    }
}

/// Classical MFCQ for `{E w = 0, A w ≤ 0 (active)}` at a point.
fn classical_mfcq(dim: usize, eq: &[Vec<Rational>], active: &[Vec<Rational>], method: &str, scope: &str) -> Result<CqVerdict, Error> {
    let em = Matrix::from_rows(dim, eq.to_vec())?;
    let lb = linear_basis(&em);
    if !lb.row_independent {
        let dep = em.transpose().nullspace().into_iter().next().expect("dependent rows have a left null vector");
        let mut v = CqVerdict::fails(method, scope, vec![("eq_dependence", dep)]);
        v.reason = Some(format!("equality gradients have rank {} < {}", lb.rank, eq.len()));
        return Ok(v);
    }
    let mut lp = LpProblem::new(dim);
    for r in eq {
        lp.add_eq(r.clone(), Rational::zero());
    }
    for r in active {
        lp.add_le(r.clone(), -one());
    }
    Ok(match lp_solve(&lp)? {
        LpOutcome::Infeasible { farkas_ineq, farkas_eq } => {
            let mut v = CqVerdict::fails(method, scope, vec![("ineq_multipliers", farkas_ineq), ("eq_multipliers", farkas_eq)]);
            v.reason = Some("no strictly decreasing direction for the active inequalities".into());
            v
        }
        out => CqVerdict::holds(method, json!({"rank": lb.rank, "direction": vec_json(out.primal().expect("feasible"))})),
    })
}

/// One branch and its verdict.
#[derive(Clone, Debug)]
pub struct BranchVerdict {
    pub branch: Branch,
    pub verdict: CqVerdict,
}

#[derive(Clone, Debug)]
pub struct MfcqReport {
    pub point: MpccPoint,
    /// Linear independence of the gradient family of the definition.
    pub family_independent: bool,
    /// MPCC-MFCQ by definition (independence plus a strict direction).
    pub definition: CqVerdict,
    pub branches: Vec<BranchVerdict>,
}

impl MfcqReport {
    pub fn status(&self) -> Status {
        if self.branches.iter().all(|b| b.verdict.is_holds()) && self.definition.is_holds() {
            Status::Holds
        } else {
            Status::Fails
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status().as_str(),
            "point": self.point.to_json(),
            "family_independent": self.family_independent,
            "definition": self.definition.to_json(),
            "branches": self.branches.iter().map(|b| {
                let mut j = b.verdict.to_json();
                j["branch"] = b.branch.to_json();
                j
            }).collect::<Vec<_>>(),
        })
    }
}

/// MPCC-MFCQ at `(x̄, ȳ, λ̄)`, branch by branch. With a second multiplier
/// λ̂ every branch fails: `(0, 0, λ̂ − λ̄)` is orthogonal to the equality
/// gradients and has the right signs on the λ-inequalities.
pub fn mpcc_mfcq_check(p: &MpecProblem, lambda: &[Rational]) -> Result<MfcqReport, Error> {
    let pt = mpcc_index_sets(p, lambda)?;
    let gr = Gradients::new(p, &pt);
    let dim = gr.dim();
    let family = gr.family(&pt);
    let family_independent = linear_basis(&Matrix::from_rows(dim, family.clone())?).row_independent;
    let big_g_rows: Vec<Vec<Rational>> = pt.i_big_g.iter().map(|&k| gr.big_g[k].clone()).collect();
    let definition = classical_mfcq(dim, &family, &big_g_rows, "definition", "MPCC-MFCQ")?;
    let other = other_multiplier(p, lambda)?;
    let mut out = Vec::new();
    for br in branches(&pt) {
        let verdict = if let Some(hat) = &other {
            let diff: Vec<Rational> = hat.iter().zip(lambda).map(|(a, b)| a - b).collect();
            let mut v = CqVerdict::fails("nonunique_multiplier", "MPCC-MFCQ", vec![("lambda_diff", diff)]);
            v.reason = Some("a second multiplier exists".into());
            v
        } else {
            let mut eq = gr.h.clone();
            let mut active = Vec::new();
            for i in 0..gr.q {
                if pt.i_g.contains(&i) || br.beta1.contains(&i) {
                    eq.push(gr.g[i].clone());
                    if br.beta1.contains(&i) {
                        active.push(gr.e_lambda(i).iter().map(|v| -v).collect());
                    }
                } else {
                    eq.push(gr.e_lambda(i));
                    if br.beta2.contains(&i) {
                        active.push(gr.g[i].clone());
                    }
                }
            }
            active.extend(big_g_rows.iter().cloned());
            classical_mfcq(dim, &eq, &active, "mfcq", "branch MFCQ")?
        };
        out.push(BranchVerdict { branch: br, verdict });
    }
    Ok(MfcqReport { point: pt, family_independent, definition, branches: out })
}

/// MPCC-LICQ: rank of the definition's family plus `(∇G_k, 0)`, `k ∈ I_G`.
pub fn mpcc_licq_check(p: &MpecProblem, lambda: &[Rational]) -> Result<CqVerdict, Error> {
    let pt = mpcc_index_sets(p, lambda)?;
    if let Some(hat) = other_multiplier(p, lambda)? {
        let diff: Vec<Rational> = hat.iter().zip(lambda).map(|(a, b)| a - b).collect();
        let mut v = CqVerdict::fails("nonunique_multiplier", "MPCC-LICQ", vec![("lambda_diff", diff)]);
        v.reason = Some("a second multiplier exists".into());
        return Ok(v);
    }
    let gr = Gradients::new(p, &pt);
    let mut rows = gr.family(&pt);
    rows.extend(pt.i_big_g.iter().map(|&k| gr.big_g[k].clone()));
    let m = Matrix::from_rows(gr.dim(), rows)?;
    let lb = linear_basis(&m);
    if lb.row_independent {
        Ok(CqVerdict::holds("rank", json!({"rank": lb.rank})))
    } else {
        let dep = m.transpose().nullspace().into_iter().next().expect("dependent rows have a left null vector");
        Ok(CqVerdict::fails("rank", "MPCC-LICQ", vec![("dependence", dep)]))
    }
}

/// `T^lin_MPCC` as a union over branches, in `(u, v, μ)`.
#[derive(Clone, Debug)]
pub struct LinearizedCone {
    pub point: MpccPoint,
    pub branches: Vec<Branch>,
    pub set: DisjunctiveSet<Rational>,
}

impl LinearizedCone {
    pub fn contains(&self, d: &[Rational]) -> bool {
        self.set.contains(d)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "point": self.point.to_json(),
            "pieces": self.branches.iter().zip(&self.set.pieces).map(|(b, piece)| json!({
                "branch": b.to_json(),
                "polyhedron": piece.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn mpec_linearized_cone(p: &MpecProblem, lambda: &[Rational]) -> Result<LinearizedCone, Error> {
    let pt = mpcc_index_sets(p, lambda)?;
    let (n, m, q) = (p.n, p.m, p.q);
    let dim = n + m + q;
    let z = p.zbar();
    let jx = MpecProblem::jacobian(&p.phi, &z, p.xs());
    let jy = MpecProblem::jacobian(&p.phi, &z, p.ys());
    let hl = p.hess_lag(&z, lambda);
    let gg = p.grad_g(&z);
    let jg = MpecProblem::jacobian(&p.big_g, &z, 0..n + m);
    let zero = Rational::zero;
    let row = |f: &dyn Fn(usize) -> Rational| -> Row<Rational> { ((0..dim).map(f).collect(), zero()) };

    let mut common_eq: Vec<Row<Rational>> = (0..m)
        .map(|j| {
            row(&|c| {
                if c < n {
                    jx[(j, c)].clone()
                } else if c < n + m {
                    jy[(j, c - n)].clone() + hl[(j, c - n)].clone()
                } else {
                    gg[(c - n - m, j)].clone()
                }
            })
        })
        .collect();
    let gv = |i: usize| row(&|c| if c >= n && c < n + m { gg[(i, c - n)].clone() } else { zero() });
    let mu = |i: usize, s: Rational| row(&|c| if c == n + m + i { s.clone() } else { zero() });
    common_eq.extend(pt.i_g.iter().map(|&i| gv(i)));
    common_eq.extend(pt.i_lambda.iter().map(|&i| mu(i, one())));
    let common_ineq: Vec<Row<Rational>> =
        pt.i_big_g.iter().map(|&k| row(&|c| if c < n + m { jg[(k, c)].clone() } else { zero() })).collect();

    let brs = branches(&pt);
    let pieces = brs
        .iter()
        .map(|br| {
            let mut eq = common_eq.clone();
            let mut ineq = common_ineq.clone();
            for &i in &br.beta1 {
                eq.push(gv(i));
                ineq.push(mu(i, -one()));
            }
            for &i in &br.beta2 {
                ineq.push(gv(i));
                eq.push(mu(i, one()));
            }
            Polyhedron::from_h(dim, ineq, eq)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinearizedCone { point: pt, branches: brs, set: DisjunctiveSet::new(dim, pieces) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StationarityMode {
    Weak,
    Mordukhovich,
}

impl StationarityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StationarityMode::Weak => "W",
            StationarityMode::Mordukhovich => "M",
        }
    }
}

/// Multipliers of `∇F + Σα_j∇h_j + Σγ_i∇g_i − Σν_i e_λi + Σζ_k∇G_k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityMultipliers {
    pub alpha: Vec<Rational>,
    pub gamma: Vec<Rational>,
    pub nu: Vec<Rational>,
    pub zeta: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationarityReport {
    pub mode: StationarityMode,
    pub point: MpccPoint,
    pub feasible: bool,
    pub multipliers: Option<StationarityMultipliers>,
    /// LPs solved (one for W; one per sign case for M).
    pub cases_checked: usize,
}

impl StationarityReport {
    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode.as_str(),
            "point": self.point.to_json(),
            "feasible": self.feasible,
            "cases_checked": self.cases_checked,
            "multipliers": self.multipliers.as_ref().map(|s| json!({
                "alpha": vec_json(&s.alpha),
                "gamma": vec_json(&s.gamma),
                "nu": vec_json(&s.nu),
                "zeta": vec_json(&s.zeta),
            })),
        })
    }
}

/// Residual of the stationarity equation for given multipliers (exact).
pub fn stationarity_residual(p: &MpecProblem, pt: &MpccPoint, mult: &StationarityMultipliers) -> Result<Vec<Rational>, Error> {
    let f = p.f.as_ref().ok_or(Error::MissingObjective)?;
    let gr = Gradients::new(p, pt);
    let dim = gr.dim();
    let z = p.zbar();
    let mut r: Vec<Rational> = (0..dim).map(|c| if c < p.n + p.m { f.differentiate(c).evaluate(&z) } else { Rational::zero() }).collect();
    let mut add = |v: &[Rational], s: &Rational| {
        for (a, b) in r.iter_mut().zip(v) {
            *a += b * s;
        }
    };
    for (j, a) in mult.alpha.iter().enumerate() {
        add(&gr.h[j], a);
    }
    for (i, c) in mult.gamma.iter().enumerate() {
        add(&gr.g[i], c);
    }
    for (i, c) in mult.nu.iter().enumerate() {
        add(&gr.e_lambda(i), &-c.clone());
    }
    for (k, c) in mult.zeta.iter().enumerate() {
        add(&gr.big_g[k], c);
    }
    Ok(r)
}

/// W- or M-stationarity of `(x̄, ȳ, λ̄)` for the objective `F`, by exact LP.
///
/// M-mode enumerates, per biactive index, the three closed cases of the
/// limiting normal cone of the complementarity set: `γ_i, ν_i ≥ 0`,
/// `γ_i = 0`, `ν_i = 0`.
pub fn stationarity_check(p: &MpecProblem, lambda: &[Rational], mode: StationarityMode) -> Result<StationarityReport, Error> {
    let f = p.f.as_ref().ok_or(Error::MissingObjective)?;
    let pt = mpcc_index_sets(p, lambda)?;
    let gr = Gradients::new(p, &pt);
    let (m, q, pp) = (p.m, p.q, p.p);
    let dim = gr.dim();
    let nv = m + 2 * q + pp;
    let (ga, nu, ze) = (m, m + q, m + 2 * q);
    let z = p.zbar();
    let grad_f: Vec<Rational> = (0..dim).map(|c| if c < p.n + p.m { f.differentiate(c).evaluate(&z) } else { Rational::zero() }).collect();

    let mut base = LpProblem::new(nv);
    for c in 0..dim {
        let mut r = vec![Rational::zero(); nv];
        for j in 0..m {
            r[j] = gr.h[j][c].clone();
        }
        for i in 0..q {
            r[ga + i] = gr.g[i][c].clone();
            r[nu + i] = -gr.e_lambda(i)[c].clone();
        }
        for k in 0..pp {
            r[ze + k] = gr.big_g[k][c].clone();
        }
        base.add_eq(r, -grad_f[c].clone());
    }
    for &i in &pt.i_lambda {
        base.fix_zero(ga + i);
    }
    for &i in &pt.i_g {
        base.fix_zero(nu + i);
    }
    for k in 0..pp {
        if pt.i_big_g.contains(&k) {
            base.nonneg(ze + k);
        } else {
            base.fix_zero(ze + k);
        }
    }
    let ncases = match mode {
        StationarityMode::Weak => 1,
        StationarityMode::Mordukhovich => 3usize.pow(pt.i_0.len() as u32),
    };
    let mut checked = 0;
    for case in 0..ncases {
        let mut lp = base.clone();
        if mode == StationarityMode::Mordukhovich {
            let mut c = case;
            for &i in &pt.i_0 {
                match c % 3 {
                    0 => {
                        lp.nonneg(ga + i);
                        lp.nonneg(nu + i);
                    }
                    1 => {
                        lp.fix_zero(ga + i);
                    }
                    _ => {
                        lp.fix_zero(nu + i);
                    }
                }
                c /= 3;
            }
        }
        checked += 1;
        if let Some(s) = lp_solve(&lp)?.primal() {
            let mult = StationarityMultipliers {
                alpha: s[..m].to_vec(),
                gamma: s[ga..nu].to_vec(),
                nu: s[nu..ze].to_vec(),
                zeta: s[ze..].to_vec(),
            };
            return Ok(StationarityReport { mode, point: pt, feasible: true, multipliers: Some(mult), cases_checked: checked });
        }
    }
    Ok(StationarityReport { mode, point: pt, feasible: false, multipliers: None, cases_checked: checked })
}

#[derive(Clone, Debug)]
pub struct GcqOptions {
    pub probe: ProbeOptions,
    /// Ratios staying at or above this everywhere are reported as evidence.
    pub threshold: f64,
    /// An expected tangent cone (e.g. computed by hand) to test `d` against.
    pub expected: Option<Polyhedron<Rational>>,
}

impl Default for GcqOptions {
    fn default() -> Self {
        GcqOptions { probe: ProbeOptions::default(), threshold: 0.05, expected: None }
    }
}

/// Numerical evidence (never a verdict) that `d ∈ T^lin` is not tangent to `Ω̃`.
#[derive(Clone, Debug)]
pub struct GcqEvidence {
    pub direction: Vec<Rational>,
    /// Pieces of the linearized cone containing `d` (exact).
    pub lin_pieces: Vec<usize>,
    pub table: ProbeReport,
    /// `GACQ_VIOLATION_EVIDENCE`, `TANGENT_CONSISTENT` or `INCONCLUSIVE`.
    pub tag: &'static str,
    pub expected_member: Option<bool>,
}

impl GcqEvidence {
    pub fn to_json(&self) -> Value {
        json!({
            "direction": vec_json(&self.direction),
            "in_linearized_cone": true,
            "linearized_pieces": idx_json(&self.lin_pieces),
            "numerical": true,
            "table": serde_json::to_value(&self.table).expect("report serializes"),
            "tag": self.tag,
            "expected_tangent_member": self.expected_member,
        })
    }
}

pub fn gcq_evidence(p: &MpecProblem, lambda: &[Rational], d: &[Rational], opts: &GcqOptions) -> Result<GcqEvidence, Error> {
    let lin = mpec_linearized_cone(p, lambda)?;
    if d.len() != lin.set.dim {
        return Err(Error::DimensionMismatch(format!("direction has {} entries, expected {}", d.len(), lin.set.dim)));
    }
    let lin_pieces = lin.set.containing_pieces(d);
    if lin_pieces.is_empty() {
        return Err(Error::DirectionNotInLinCone);
    }
    let w = to_f64_vec(&lin.point.w());
    let df = to_f64_vec(d);
    let po = &opts.probe;
    let mut distance = Vec::new();
    let mut solves = 0;
    for (i, &t) in po.t_schedule.iter().enumerate() {
        let z: Vec<f64> = w.iter().zip(&df).map(|(a, b)| a + t * b).collect();
        let e = dist_mpcc(p, &z, po.budget, sample_seed(po.seed, i as u64));
        solves += e.solves;
        distance.push(e.value);
    }
    let table = ProbeReport::build(po.t_schedule.clone(), distance, solves, po);
    let tag = if !table.ratio.is_empty() && table.ratio.iter().all(|&r| r >= opts.threshold) {
        "GACQ_VIOLATION_EVIDENCE"
    } else if table.final_ratio() < po.vanish_tol {
        "TANGENT_CONSISTENT"
    } else {
        "INCONCLUSIVE"
    };
    Ok(GcqEvidence {
        direction: d.to_vec(),
        lin_pieces,
        table,
        tag,
        expected_member: opts.expected.as_ref().map(|e| e.contains(d)),
    })
}

/// Everything `diagnose-mpcc` reports at one λ̄.
pub fn diagnose(p: &MpecProblem, lambda: &[Rational]) -> Result<Value, Error> {
    let mfcq = mpcc_mfcq_check(p, lambda)?;
    let licq = mpcc_licq_check(p, lambda)?;
    let lin = mpec_linearized_cone(p, lambda)?;
    let uniq = multiplier_uniqueness(p)?;
    let mut j = json!({
        "point": mfcq.point.to_json(),
        "uniqueness": uniq.to_json(),
        "mpcc_mfcq": mfcq.to_json(),
        "mpcc_licq": licq.to_json(),
        "linearized_cone": lin.to_json(),
    });
    if p.f.is_some() {
        for mode in [StationarityMode::Weak, StationarityMode::Mordukhovich] {
            let key = format!("{}_stationarity", mode.as_str());
            j[key] = stationarity_check(p, lambda, mode)?.to_json();
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{int, ints, rat};
    use crate::model::corpus;

    fn half() -> Vec<Rational> {
        vec![rat(1, 2), rat(1, 2)]
    }

    #[test]
    fn index_sets() {
        let p = corpus::load("parabolic_pair");
        let pt = mpcc_index_sets(&p, &half()).unwrap();
        assert_eq!((pt.i_g.clone(), pt.i_lambda.clone(), pt.i_0.clone(), pt.i_big_g.clone()), (vec![0, 1], vec![], vec![], vec![0, 1]));
        let pt = mpcc_index_sets(&p, &ints(&[1, 0])).unwrap();
        assert_eq!((pt.i_g, pt.i_0), (vec![0], vec![1]));
        assert!(matches!(mpcc_index_sets(&p, &ints(&[1, 1])), Err(Error::InfeasiblePoint(_))));
        let inner = MpecProblem::from_strings(&["y1 - x1"], &["y1 - 1"], &[], None, ints(&[0]), ints(&[0])).unwrap();
        assert_eq!(mpcc_index_sets(&inner, &ints(&[0])).unwrap().i_lambda, vec![0]);
    }

    #[test]
    fn uniqueness() {
        let p = corpus::load("parabolic_pair");
        let u = multiplier_uniqueness(&p).unwrap();
        assert!(!u.unique);
        assert_eq!(u.second, Some(ints(&[0, 1])));
        let single = MpecProblem::from_strings(&["y1 - x1"], &["y1"], &[], None, ints(&[0]), ints(&[0])).unwrap();
        assert!(multiplier_uniqueness(&single).unwrap().unique);
        let active = MpecProblem::from_strings(&["y1 - x1 - 1"], &["y1"], &[], None, ints(&[0]), ints(&[0])).unwrap();
        let u = multiplier_uniqueness(&active).unwrap();
        assert!(u.unique && u.reference == ints(&[1]));
    }

    #[test]
    fn mfcq_fails_with_second_multiplier() {
        let p = corpus::load("parabolic_pair");
        let r = mpcc_mfcq_check(&p, &half()).unwrap();
        assert_eq!(r.branches.len(), 1);
        assert_eq!(r.branches[0].verdict.status, Status::Fails);
        assert_eq!(r.branches[0].verdict.witness("lambda_diff"), Some(&[rat(1, 2), rat(-1, 2)][..]));
        let r = mpcc_mfcq_check(&p, &ints(&[1, 0])).unwrap();
        assert_eq!(r.branches.len(), 2);
        assert!(r.branches.iter().all(|b| b.verdict.status == Status::Fails));
        assert_eq!(r.status(), Status::Fails);
    }

    #[test]
    fn mfcq_holds_for_unique_multiplier() {
        let p = MpecProblem::from_strings(&["y1 - x1"], &["y1"], &[], None, ints(&[0]), ints(&[0])).unwrap();
        let r = mpcc_mfcq_check(&p, &ints(&[0])).unwrap();
        assert_eq!(r.branches.len(), 2);
        for b in &r.branches {
            assert!(b.verdict.is_holds(), "{}", b.verdict.to_json());
        }
        assert!(r.family_independent);
        assert_eq!(r.status(), Status::Holds);
        assert!(mpcc_licq_check(&p, &ints(&[0])).unwrap().is_holds());
    }

    #[test]
    fn licq_cases() {
        let p = corpus::load("parabolic_pair");
        for l in [half(), ints(&[1, 0]), ints(&[0, 1])] {
            assert_eq!(mpcc_licq_check(&p, &l).unwrap().status, Status::Fails);
        }
        let u = corpus::load("unconstrained");
        assert!(mpcc_licq_check(&u, &[]).unwrap().is_holds());
        // G = (x1, -x1) at 0: dependent active gradients
        let d = MpecProblem::from_strings(&["y1 - x1"], &[], &["x1", "-x1"], None, ints(&[0]), ints(&[0])).unwrap();
        let v = mpcc_licq_check(&d, &[]).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert!(v.witness("dependence").is_some());
    }

    #[test]
    fn linearized_cone_matches_hand_system() {
        let p = corpus::load("parabolic_pair");
        let lin = mpec_linearized_cone(&p, &half()).unwrap();
        assert_eq!(lin.set.pieces.len(), 1);
        // (u1,u2,v1,v2,v3,μ1,μ2)
        let r = |v: &[i64], b: i64| (ints(v), int(b));
        let hand = Polyhedron::from_h(
            7,
            vec![r(&[-2, -1, 0, 0, 0, 0, 0], 0), r(&[-1, -2, 0, 0, 0, 0, 0], 0)],
            vec![
                (vec![int(-1), int(0), rat(3, 2), int(0), int(0), int(0), int(0)], int(0)),
                (vec![int(0), int(-1), int(0), rat(3, 2), int(0), int(0), int(0)], int(0)),
                r(&[0, 0, 0, 0, 0, 1, 1], 0),
                r(&[0, 0, 0, 0, 1, 0, 0], 0),
            ],
        )
        .unwrap();
        assert!(lin.set.pieces[0].same_set(&hand));
        assert!(lin.contains(&ints(&[3, 0, 2, 0, 0, 0, 0])));
        let lin = mpec_linearized_cone(&p, &ints(&[1, 0])).unwrap();
        assert_eq!(lin.set.pieces.len(), 2);
        let u = corpus::load("unconstrained");
        assert_eq!(mpec_linearized_cone(&u, &[]).unwrap().set.pieces.len(), 1);
    }

    #[test]
    fn weak_stationarity() {
        let p = corpus::load("parabolic_pair");
        for l in [ints(&[1, 0]), ints(&[0, 1]), vec![rat(7, 10), rat(3, 10)]] {
            let r = stationarity_check(&p, &l, StationarityMode::Weak).unwrap();
            assert!(!r.feasible, "{l:?}");
        }
        let r = stationarity_check(&p, &half(), StationarityMode::Weak).unwrap();
        assert!(r.feasible);
        let mult = r.multipliers.unwrap();
        assert!(stationarity_residual(&p, &r.point, &mult).unwrap().iter().all(Zero::is_zero));
        assert_eq!(mult.alpha, ints(&[1, 1, 0]));
        let m = stationarity_check(&p, &half(), StationarityMode::Mordukhovich).unwrap();
        assert!(m.feasible);
        let none = corpus::load("unconstrained");
        assert!(matches!(stationarity_check(&none, &[], StationarityMode::Weak), Err(Error::MissingObjective)));
    }

    #[test]
    fn m_stationarity_enumerates_biactive_cases() {
        // h = y1 - x1 + l1 with y1 ≤ 0 biactive at the origin; the multipliers
        // are forced: α = 1, ν = 1 and γ = -(∂F/∂y1) - 1
        let mk = |f: &str| MpecProblem::from_strings(&["y1 - x1"], &["y1"], &[], Some(f), ints(&[0]), ints(&[0])).unwrap();
        let p = mk("x1 + 2*y1");
        let w = stationarity_check(&p, &ints(&[0]), StationarityMode::Weak).unwrap();
        assert!(w.feasible);
        let s = w.multipliers.unwrap();
        assert_eq!((s.alpha, s.gamma, s.nu), (ints(&[1]), ints(&[-3]), ints(&[1])));
        let m = stationarity_check(&p, &ints(&[0]), StationarityMode::Mordukhovich).unwrap();
        assert!(!m.feasible);
        assert_eq!(m.cases_checked, 3);
        let p = mk("x1 - 2*y1");
        let m = stationarity_check(&p, &ints(&[0]), StationarityMode::Mordukhovich).unwrap();
        assert!(m.feasible);
        assert_eq!(m.multipliers.unwrap().gamma, ints(&[1]));
    }

    #[test]
    fn gcq_direction_outside_lin_cone() {
        let p = corpus::load("parabolic_pair");
        let r = gcq_evidence(&p, &half(), &ints(&[1, 0, 0, 0, 0, 0, 0]), &GcqOptions::default());
        assert!(matches!(r, Err(Error::DirectionNotInLinCone)));
    }

    #[test]
    fn gcq_zero_direction() {
        let p = corpus::load("parabolic_pair");
        let o = GcqOptions { probe: ProbeOptions { budget: 8, ..ProbeOptions::default() }, ..GcqOptions::default() };
        let e = gcq_evidence(&p, &half(), &ints(&[0; 7]), &o).unwrap();
        assert!(e.table.ratio.iter().all(|&r| r == 0.0));
        assert_eq!(e.tag, "TANGENT_CONSISTENT");
    }
}
