//! Feasibility of the reference point.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::problem::MpecProblem;
use crate::exactmath::lp::{lp_solve, LpOutcome, LpProblem};
use crate::exactmath::rational::ser;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    #[serde(serialize_with = "ser::vec")]
    pub g_values: Vec<Rational>,
    pub g_ok: bool,
    #[serde(serialize_with = "ser::vec")]
    pub big_g_values: Vec<Rational>,
    pub big_g_ok: bool,
    #[serde(serialize_with = "ser::vec")]
    pub y_star: Vec<Rational>,
    /// `Λ(ȳ, ȳ*) ≠ ∅`.
    pub multipliers_exist: bool,
    #[serde(serialize_with = "ser::opt_vec")]
    pub multiplier: Option<Vec<Rational>>,
    /// Certificate of `Λ = ∅`: `d` with `∇g_i(ȳ)·d ≤ 0` on active `i` and `ȳ*·d > 0`.
    #[serde(serialize_with = "ser::opt_vec")]
    pub farkas: Option<Vec<Rational>>,
    pub feasible: bool,
}

/// `λ ≥ 0`, `λ_i = 0` off the active set, `∇g(ȳ)ᵀλ = ȳ*`.
pub fn multiplier_lp(p: &MpecProblem, y_star: &[Rational]) -> LpProblem<Rational> {
    let z = p.zbar();
    let gval = MpecProblem::eval_all(&p.g, &z);
    let jac = p.grad_g(&z);
    let mut lp = LpProblem::new(p.q);
    for j in 0..p.m {
        lp.add_eq(jac.column(j), y_star[j].clone());
    }
    for i in 0..p.q {
        lp.nonneg(i);
        if !gval[i].is_zero() {
            lp.fix_zero(i);
        }
    }
    lp
}

pub fn validate_point(p: &MpecProblem) -> FeasibilityReport {
    let z = p.zbar();
    let g_values = MpecProblem::eval_all(&p.g, &z);
    let big_g_values = MpecProblem::eval_all(&p.big_g, &z);
    let g_ok = g_values.iter().all(|v| !v.is_positive());
    let big_g_ok = big_g_values.iter().all(|v| !v.is_positive());
    let y_star = p.y_star();
    let (multipliers_exist, multiplier, farkas) = if g_ok {
        match lp_solve(&multiplier_lp(p, &y_star)) {
            Ok(LpOutcome::Optimal { primal, .. }) => (true, Some(primal), None),
            Ok(LpOutcome::Infeasible { farkas_eq, .. }) => {
                (false, None, Some(farkas_eq[..p.m].iter().map(|v| -v.clone()).collect()))
            }
            _ => (false, None, None),
        }
    } else {
        (false, None, None)
    };
    FeasibilityReport {
        feasible: g_ok && big_g_ok && multipliers_exist,
        g_values,
        g_ok,
        big_g_values,
        big_g_ok,
        y_star,
        multipliers_exist,
        multiplier,
        farkas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{int, ints};
    use crate::exactmath::scalar::dot;

    fn problem(phi3: &str, y: Vec<Rational>) -> MpecProblem {
        MpecProblem::from_strings(
            &["y1 - x1", "y2 - x2", phi3],
            &["y3 + 1/2*y1^2", "y3 + 1/2*y2^2"],
            &["-x1 - 2*x2", "-2*x1 - x2"],
            None,
            ints(&[0, 0]),
            y,
        )
        .unwrap()
    }

    #[test]
    fn reference_point_is_feasible() {
        let r = validate_point(&problem("-1", ints(&[0, 0, 0])));
        assert!(r.feasible);
        assert_eq!(r.y_star, ints(&[0, 0, 1]));
        let l = r.multiplier.unwrap();
        assert_eq!(l[0].clone() + l[1].clone(), int(1));
    }

    #[test]
    fn lower_level_violation() {
        let r = validate_point(&problem("-1", ints(&[0, 0, 1])));
        assert!(!r.g_ok);
        assert_eq!(r.g_values[0], int(1));
        assert!(!r.feasible);
    }

    #[test]
    fn empty_multiplier_set_has_certificate() {
        let r = validate_point(&problem("1", ints(&[0, 0, 0])));
        assert!(r.g_ok && !r.multipliers_exist && !r.feasible);
        // independent check: ȳ* = (0,0,−1) and no λ ≥ 0 sums to −1
        assert_eq!(r.y_star, ints(&[0, 0, -1]));
        let d = r.farkas.expect("certificate");
        let p = problem("1", ints(&[0, 0, 0]));
        let jac = p.grad_g(&p.zbar());
        for i in 0..2 {
            assert!(!dot(jac.row(i), &d).is_positive());
        }
        assert!(dot(&r.y_star, &d).is_positive());
    }
}
