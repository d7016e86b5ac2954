//! Randomized invariants of the exact layers, shared by the property tests
//! and the acceptance suite. Every assertion is exact.

#![allow(dead_code)]

use mpec_cq::exactmath::lp::{lp_solve, LpOutcome, LpProblem, Sense};
use mpec_cq::exactmath::matrix::Matrix;
use mpec_cq::exactmath::scalar::dot;
use mpec_cq::lowerlevel::{
    critical_cone, critical_normal_cone, directional_multipliers, min_norm_multiplier,
    multiplier_set,
};
use mpec_cq::model::MpecProblem;
use mpec_cq::polyhedra::PolyCone;
use mpec_cq::Rational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn r(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

fn rv(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| r(x)).collect()
}

fn vecs(dim: usize, count: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, dim), count)
}

fn cone_strategy() -> impl Strategy<Value = (usize, Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), vecs(d, 0..6), vecs(d, 0..2)))
}

pub fn polar_is_an_involution(cases: u32) -> Result<(), String> {
    run(cases, cone_strategy(), |(dim, rays, lin)| {
        let c = PolyCone::from_generators(
            dim,
            rays.iter().map(|v| rv(v)).collect(),
            lin.iter().map(|v| rv(v)).collect(),
        )
        .unwrap();
        let p = c.polar();
        prop_assert!(p.polar().same_set(&c));
        for g in c.rays().iter().chain(c.lineality()) {
            for h in p.rays() {
                prop_assert!(!dot(g, h).is_positive());
            }
            for h in p.lineality() {
                prop_assert!(dot(g, h).is_zero());
            }
        }
        Ok(())
    })
}

fn lp_strategy() -> impl Strategy<
    Value = (
        usize,
        Vec<Vec<i64>>,
        Vec<i64>,
        Vec<Vec<i64>>,
        Vec<i64>,
        Vec<i64>,
        bool,
    ),
> {
    (1usize..=4).prop_flat_map(|n| {
        (
            Just(n),
            vecs(n, 0..6),
            prop::collection::vec(-4i64..=4, 6),
            vecs(n, 0..3),
            prop::collection::vec(-4i64..=4, 3),
            prop::collection::vec(-3i64..=3, n),
            any::<bool>(),
        )
    })
}

pub fn lp_certificates_are_exact(cases: u32) -> Result<(), String> {
    run(cases, lp_strategy(), |(n, a, b, ceq, d, c, max)| {
        let sense = if max { Sense::Max } else { Sense::Min };
        let mut lp = LpProblem::with_objective(rv(&c), sense);
        for (row, rhs) in a.iter().zip(&b) {
            lp.add_le(rv(row), r(*rhs));
        }
        for (row, rhs) in ceq.iter().zip(&d) {
            lp.add_eq(rv(row), r(*rhs));
        }
        let am = Matrix::from_rows(n, lp.a.clone()).unwrap();
        let cm = Matrix::from_rows(n, lp.ceq.clone()).unwrap();
        let feasible = |x: &[Rational]| {
            am.mul_vec(x).iter().zip(&lp.b).all(|(l, r)| l <= r) && cm.mul_vec(x) == lp.d
        };
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal {
                primal,
                value,
                dual_ineq,
                dual_eq,
            } => {
                prop_assert!(feasible(&primal));
                prop_assert_eq!(dot(&lp.c, &primal), value.clone());
                let lhs: Vec<Rational> = am
                    .tr_mul_vec(&dual_ineq)
                    .iter()
                    .zip(cm.tr_mul_vec(&dual_eq))
                    .map(|(x, y)| x + y)
                    .collect();
                prop_assert_eq!(lhs, lp.c.clone());
                prop_assert_eq!(dot(&lp.b, &dual_ineq) + dot(&lp.d, &dual_eq), value);
                for y in &dual_ineq {
                    let ok = if max {
                        !y.is_negative()
                    } else {
                        !y.is_positive()
                    };
                    prop_assert!(ok);
                }
            }
            LpOutcome::Infeasible {
                farkas_ineq,
                farkas_eq,
            } => {
                prop_assert!(farkas_ineq.iter().all(|y| !y.is_negative()));
                let lhs: Vec<Rational> = am
                    .tr_mul_vec(&farkas_ineq)
                    .iter()
                    .zip(cm.tr_mul_vec(&farkas_eq))
                    .map(|(x, y)| x + y)
                    .collect();
                prop_assert!(lhs.iter().all(Zero::is_zero));
                prop_assert!((dot(&lp.b, &farkas_ineq) + dot(&lp.d, &farkas_eq)).is_negative());
            }
            LpOutcome::Unbounded { primal, ray } => {
                prop_assert!(feasible(&primal));
                prop_assert!(am.mul_vec(&ray).iter().all(|v| !v.is_positive()));
                prop_assert!(cm.mul_vec(&ray).iter().all(Zero::is_zero));
                let gain = dot(&lp.c, &ray);
                let ok = if max {
                    gain.is_positive()
                } else {
                    gain.is_negative()
                };
                prop_assert!(ok);
            }
        }
        Ok(())
    })
}

/// A lower level with all constraints active at ȳ = 0:
/// `g_i(y) = a_iᵀy + Σ_jk Q_i[j][k] y_j y_k`, and `y* = Σ λ⁰_i a_i`.
#[derive(Debug, Clone)]
struct Instance {
    m: usize,
    a: Vec<Vec<i64>>,
    quad: Vec<Vec<i64>>,
    lambda0: Vec<i64>,
}

impl Instance {
    fn problem(&self) -> MpecProblem {
        let mut pairs = Vec::new();
        for j in 0..self.m {
            for k in j..self.m {
                pairs.push((j, k));
            }
        }
        let g: Vec<String> = self
            .a
            .iter()
            .zip(&self.quad)
            .map(|(a, qd)| {
                let mut terms: Vec<String> = a
                    .iter()
                    .enumerate()
                    .map(|(j, c)| format!("({c})*y{}", j + 1))
                    .collect();
                terms.extend(
                    qd.iter()
                        .zip(&pairs)
                        .map(|(c, (j, k))| format!("({c})*y{}*y{}", j + 1, k + 1)),
                );
                terms.join(" + ")
            })
            .collect();
        let phi: Vec<String> = (1..=self.m).map(|j| format!("y{j} - x{j}")).collect();
        let phi: Vec<&str> = phi.iter().map(String::as_str).collect();
        let g: Vec<&str> = g.iter().map(String::as_str).collect();
        MpecProblem::from_strings(&phi, &g, &[], None, vec![r(0); self.m], vec![r(0); self.m])
            .unwrap()
    }

    fn y_star(&self) -> Vec<Rational> {
        (0..self.m)
            .map(|j| {
                r(self
                    .a
                    .iter()
                    .zip(&self.lambda0)
                    .map(|(a, l)| a[j] * l)
                    .sum())
            })
            .collect()
    }
}

fn instance_strategy() -> impl Strategy<Value = (Instance, Vec<Vec<i64>>)> {
    (2usize..=3, 1usize..=3)
        .prop_flat_map(|(m, q)| {
            let npairs = m * (m + 1) / 2;
            (
                Just(m),
                vecs(m, q..q + 1),
                vecs(npairs, q..q + 1),
                prop::collection::vec(0i64..=2, q),
                prop::collection::vec(prop::collection::vec(0i64..=3, 8), 20),
            )
        })
        .prop_map(|(m, a, quad, lambda0, dirs)| {
            (
                Instance {
                    m,
                    a,
                    quad,
                    lambda0,
                },
                dirs,
            )
        })
}

/// Twenty critical directions: nonnegative combinations of the rays plus
/// signed lineality components.
fn critical_directions(k: &PolyCone<Rational>, weights: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    let gens: Vec<Vec<Rational>> = k
        .rays()
        .iter()
        .cloned()
        .chain(k.lineality().iter().cloned())
        .chain(
            k.lineality()
                .iter()
                .map(|l| l.iter().map(|x| -x.clone()).collect()),
        )
        .collect();
    weights
        .iter()
        .map(|w| {
            let mut v = vec![r(0); k.dim()];
            for (g, c) in gens.iter().zip(w) {
                for (vi, gi) in v.iter_mut().zip(g) {
                    *vi += gi * r(*c);
                }
            }
            v
        })
        .collect()
}

pub fn lower_level_multiplier_invariants(cases: u32) -> Result<(), String> {
    run(cases, instance_strategy(), |(inst, weights)| {
        let p = inst.problem();
        let y = vec![r(0); inst.m];
        let ys = inst.y_star();
        let ms = multiplier_set(&p, &y, &ys).unwrap();
        prop_assert!(!ms.is_empty());

        // gradients on the support of an extreme multiplier are independent
        let grads = Matrix::from_rows(inst.m, inst.a.iter().map(|a| rv(a)).collect()).unwrap();
        for e in &ms.extreme {
            let support: Vec<usize> = (0..e.len()).filter(|&i| e[i].is_positive()).collect();
            prop_assert_eq!(grads.select_rows(&support).rank(), support.len());
        }

        // min-norm multiplier is positively homogeneous in y*
        let base = min_norm_multiplier(&p, &y, &ys).unwrap();
        let t = Rational::new(7.into(), 3.into());
        let scaled: Vec<Rational> = ys.iter().map(|v| v * &t).collect();
        let lhs = min_norm_multiplier(&p, &y, &scaled).unwrap();
        prop_assert_eq!(lhs, base.iter().map(|v| v * &t).collect::<Vec<_>>());

        let k = critical_cone(&p, &y, &ys, None).unwrap().cone;
        let kpolar = k.polar();
        for v in critical_directions(&k, &weights) {
            prop_assert!(k.contains(&v));
            // N_K(v) = K° ∩ v⊥, built from every extreme multiplier alike
            let expected = kpolar.with_eq(v.clone());
            for e in &ms.extreme {
                let n = critical_normal_cone(&p, &y, &ys, &v, e).unwrap();
                prop_assert!(n.same_set(&expected), "v = {:?}, λ = {:?}", v, e);
            }
            // the directional face meets E(y, y*)
            // (θ = +∞ is possible only when Λ is unbounded)
            let dm = match directional_multipliers(&p, &y, &ys, &v) {
                Err(mpec_cq::Error::LpUnbounded) => {
                    prop_assert!(!ms.rays.is_empty());
                    continue;
                }
                other => other.unwrap(),
            };
            prop_assert!(!dm.face_vertices.is_empty());
            for fv in &dm.face_vertices {
                prop_assert!(ms.extreme.contains(fv));
            }
        }
        Ok(())
    })
}
