//! Local least-squares solver: augmented Lagrangian outer loop around a
//! Levenberg–Marquardt inner loop; derivatives are exact when the problem
//! supplies them and central differences otherwise.
//!
//! Minimizes `½‖r(x)‖²` subject to `c_E(x) = 0`, `c_I(x) ≤ 0`.

use nalgebra::{DMatrix, DVector};

use crate::model::Poly;

const NEAR_ACTIVE: f64 = 1e-3;

type VecFn<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Exact derivatives: given `x` and one weight per function (residuals,
/// then equalities, then inequalities), returns the Jacobian of all
/// functions stacked in that order and `Σ w_i ∇²f_i`.
pub type DerivFn<'a> = &'a dyn Fn(&[f64], &[f64]) -> (DMatrix<f64>, DMatrix<f64>);

pub struct LocalProblem<'a> {
    pub dim: usize,
    pub residual: VecFn<'a>,
    pub eq: VecFn<'a>,
    pub ineq: VecFn<'a>,
    /// Finite differences are used when absent.
    pub derivs: Option<DerivFn<'a>>,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative step of the central differences.
    pub fd_step: f64,
    pub feas_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_outer: 25, max_inner: 80, fd_step: 1e-6, feas_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub x: Vec<f64>,
    /// `‖r(x)‖` at the returned point.
    pub value: f64,
    /// Max violation of the constraints at the returned point.
    pub violation: f64,
}

fn no_constraints(_: &[f64]) -> Vec<f64> {
    Vec::new()
}

impl<'a> LocalProblem<'a> {
    pub fn unconstrained(dim: usize, residual: VecFn<'a>) -> Self {
        LocalProblem { dim, residual, eq: &no_constraints, ineq: &no_constraints, derivs: None }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let e = (self.eq)(x).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let i = (self.ineq)(x).iter().fold(0.0f64, |a, &v| a.max(v));
        if e.is_nan() || i.is_nan() {
            f64::INFINITY
        } else {
            e.max(i)
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn jacobian(f: VecFn<'_>, x: &[f64], rows: usize, h: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(rows, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        let step = h * (1.0 + x[c].abs());
        xp[c] = x[c] + step;
        let fp = f(&xp);
        xp[c] = x[c] - step;
        let fm = f(&xp);
        xp[c] = x[c];
        for r in 0..rows {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    j
}

struct Penalty<'p, 'a> {
    p: &'p LocalProblem<'a>,
    mu_e: Vec<f64>,
    mu_i: Vec<f64>,
    rho: f64,
}

impl Penalty<'_, '_> {
    fn stacked(&self, x: &[f64]) -> Vec<f64> {
        let s = self.rho.sqrt();
        let mut r = (self.p.residual)(x);
        r.extend((self.p.eq)(x).iter().zip(&self.mu_e).map(|(c, m)| s * (c + m / self.rho)));
        r.extend((self.p.ineq)(x).iter().zip(&self.mu_i).map(|(c, m)| s * (c + m / self.rho).max(0.0)));
        r
    }

    /// Weights of the curvature term: the stacked residual values before
    /// masking (multiplier estimates on the constraint rows).
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let mut w = (self.p.residual)(x);
        w.extend((self.p.eq)(x).iter().zip(&self.mu_e).map(|(c, m)| self.rho * c + m));
        w.extend((self.p.ineq)(x).iter().zip(&self.mu_i).map(|(c, m)| (self.rho * c + m).max(0.0)));
        w
    }

    /// Jacobian of the stacked residual and the curvature term.
    fn model(&self, x: &[f64], opts: &SolverOptions) -> (DMatrix<f64>, DMatrix<f64>) {
        let nr = (self.p.residual)(x).len();
        let ci = (self.p.ineq)(x);
        let ne = self.mu_e.len();
        let (jall, curv) = match self.p.derivs {
            Some(d) => d(x, &self.weights(x)),
            None => {
                let h = opts.fd_step;
                let mut jall = DMatrix::zeros(nr + ne + ci.len(), x.len());
                jall.rows_mut(0, nr).copy_from(&jacobian(self.p.residual, x, nr, h));
                jall.rows_mut(nr, ne).copy_from(&jacobian(self.p.eq, x, ne, h));
                jall.rows_mut(nr + ne, ci.len()).copy_from(&jacobian(self.p.ineq, x, ci.len(), h));
                (jall, self.curvature(x, (h * 100.0).min(1e-4)))
            }
        };
        let s = self.rho.sqrt();
        let mut j = jall;
        for r in nr..nr + ne {
            j.row_mut(r).scale_mut(s);
        }
        for (k, (c, m)) in ci.iter().zip(&self.mu_i).enumerate() {
            // near-active rows too, so the model sees the boundary before crossing it
            let r = nr + ne + k;
            if c + m / self.rho > -NEAR_ACTIVE {
                j.row_mut(r).scale_mut(s);
            } else {
                j.row_mut(r).fill(0.0);
            }
        }
        (j, curv)
    }

    /// `Σ_i R_i ∇²R_i` from central second differences of the unmasked
    /// functions; the weights are the stacked residual values.
    fn curvature(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let n = x.len();
        let w = self.weights(x);
        let all = |z: &[f64]| {
            let mut v = (self.p.residual)(z);
            v.extend((self.p.eq)(z));
            v.extend((self.p.ineq)(z));
            v
        };
        let f0 = all(x);
        let mut s = DMatrix::zeros(n, n);
        let steps: Vec<f64> = x.iter().map(|v| h * (1.0 + v.abs())).collect();
        let mut z = x.to_vec();
        for j in 0..n {
            for k in j..n {
                let val = if j == k {
                    z[j] = x[j] + steps[j];
                    let fp = all(&z);
                    z[j] = x[j] - steps[j];
                    let fm = all(&z);
                    z[j] = x[j];
                    (0..w.len()).map(|i| w[i] * (fp[i] - 2.0 * f0[i] + fm[i])).sum::<f64>() / (steps[j] * steps[j])
                } else {
                    let mut corner = |sj: f64, sk: f64| {
                        z[j] = x[j] + sj * steps[j];
                        z[k] = x[k] + sk * steps[k];
                        let f = all(&z);
                        z[j] = x[j];
                        z[k] = x[k];
                        f
                    };
                    let (pp, pm, mp, mm) = (corner(1.0, 1.0), corner(1.0, -1.0), corner(-1.0, 1.0), corner(-1.0, -1.0));
                    (0..w.len()).map(|i| w[i] * (pp[i] - pm[i] - mp[i] + mm[i])).sum::<f64>()
                        / (4.0 * steps[j] * steps[k])
                };
                if val.is_finite() {
                    s[(j, k)] = val;
                    s[(k, j)] = val;
                }
            }
        }
        s
    }

    fn levenberg_marquardt(&self, mut x: Vec<f64>, opts: &SolverOptions) -> Vec<f64> {
        let mut nu = 1e-3;
        let mut r = self.stacked(&x);
        let mut f = norm2(&r);
        for _ in 0..opts.max_inner {
            if !f.is_finite() || f == 0.0 {
                break;
            }
            let (j, curv) = self.model(&x, opts);
            let rv = DVector::from_vec(r.clone());
            let g = j.tr_mul(&rv);
            let jtj = j.tr_mul(&j);
            let a = &jtj + curv;
            let mut accepted = false;
            while nu < 1e16 {
                let mut damped = a.clone();
                for d in 0..x.len() {
                    damped[(d, d)] += nu * (jtj[(d, d)] + 1e-9);
                }
                // the curvature term may make the model indefinite: damp more
                let Some(ch) = damped.cholesky() else {
                    nu = nu.max(1e-6) * 4.0;
                    continue;
                };
                let step = ch.solve(&(-&g));
                let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let rn = self.stacked(&xn);
                let fnew = norm2(&rn);
                if fnew.is_finite() && fnew < f {
                    let small = step.norm() <= 1e-15 * (1.0 + norm2(&x).sqrt());
                    x = xn;
                    r = rn;
                    let gain = f - fnew;
                    f = fnew;
                    nu = (nu / 3.0).max(1e-15);
                    accepted = !small && gain > 1e-10 * (f + gain);
                    break;
                }
                nu *= 4.0;
            }
            if !accepted {
                break;
            }
        }
        x
    }
}

/// One local solve from `x0`.
pub fn solve_local(p: &LocalProblem<'_>, x0: &[f64], opts: &SolverOptions) -> LocalSolution {
    assert_eq!(x0.len(), p.dim, "start point dimension");
    let ne = (p.eq)(x0).len();
    let ni = (p.ineq)(x0).len();
    let mut pen = Penalty { p, mu_e: vec![0.0; ne], mu_i: vec![0.0; ni], rho: 10.0 };
    let mut x = x0.to_vec();
    let mut prev = f64::INFINITY;
    let mut stalls = 0;
    let outer = if ne + ni == 0 { 1 } else { opts.max_outer };
    for _ in 0..outer {
        x = pen.levenberg_marquardt(x, opts);
        let viol = p.violation(&x);
        if viol <= opts.feas_tol || !viol.is_finite() {
            break;
        }
        let ce = (p.eq)(&x);
        let ci = (p.ineq)(&x);
        for (m, c) in pen.mu_e.iter_mut().zip(&ce) {
            *m += pen.rho * c;
        }
        for (m, c) in pen.mu_i.iter_mut().zip(&ci) {
            *m = (*m + pen.rho * c).max(0.0);
        }
        if viol > 0.25 * prev {
            pen.rho = (pen.rho * 10.0).min(1e12);
        }
        // a locally infeasible stationary point: more penalty only crawls
        stalls = if pen.rho >= 1e6 && viol > 0.9 * prev { stalls + 1 } else { 0 };
        if stalls >= 3 {
            break;
        }
        prev = viol;
    }
    let value = norm2(&(p.residual)(&x)).sqrt();
    LocalSolution { violation: p.violation(&x), x, value }
}

/// Polynomial compiled for fast floating-point evaluation.
#[derive(Clone, Debug)]
pub struct FPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl FPoly {
    pub fn new(p: &Poly) -> Self {
        use num_traits::ToPrimitive;
        let terms = p
            .terms()
            .map(|(e, c)| {
                let pw = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k as i32)).collect();
                (c.to_f64().unwrap_or(f64::NAN), pw)
            })
            .collect();
        FPoly { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, pw)| pw.iter().fold(*c, |acc, &(i, k)| acc * x[i].powi(k)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_disc() {
        let res = |x: &[f64]| vec![x[0] - 2.0, x[1] - 0.0];
        let ineq = |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0];
        let p = LocalProblem { dim: 2, residual: &res, eq: &no_constraints, ineq: &ineq, derivs: None };
        let s = solve_local(&p, &[0.0, 0.5], &SolverOptions::default());
        assert!(s.violation < 1e-10, "{s:?}");
        assert!((s.value - 1.0).abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn equality_on_parabola() {
        // nearest point of {x2 = x1²} to (0, 1): x1² = 1/2
        let res = |x: &[f64]| vec![x[0], x[1] - 1.0];
        let eq = |x: &[f64]| vec![x[1] - x[0] * x[0]];
        let p = LocalProblem { dim: 2, residual: &res, eq: &eq, ineq: &no_constraints, derivs: None };
        let s = solve_local(&p, &[0.3, 0.0], &SolverOptions::default());
        assert!((s.value - 0.75f64.sqrt()).abs() < 1e-8, "{s:?}");
        assert!((s.x[0].abs() - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn exact_fit_reaches_zero() {
        let res = |x: &[f64]| vec![x[0] * x[1] - 2.0, x[0] - 1.0];
        let p = LocalProblem::unconstrained(2, &res);
        let s = solve_local(&p, &[3.0, 3.0], &SolverOptions::default());
        assert!(s.value < 1e-12, "{s:?}");
    }
}
