//! Floating-point cross-validation: distances to the graph of the normal
//! cone map and to the MPCC feasible set, tangent-ratio probes and
//! error-bound probes.
//!
//! Nothing here feeds the exact certifiers. Every distance is the best
//! value found by seeded multistart local solves, so it is an upper bound
//! on the true distance, up to the solver's feasibility tolerance.

pub mod solver;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::exactmath::scalar::to_f64_vec;
use crate::lowerlevel::{multiplier_set, LowerPoint};
use crate::model::{build_mpcc, MpecProblem, Poly};
use crate::{Error, Rational};
use solver::{solve_local, FPoly, LocalProblem, LocalSolution, SolverOptions};

/// Local solutions violating the constraints by more than this are discarded.
pub const ACCEPT_TOL: f64 = 1e-9;

/// Per-sample seed `hash(seed, index)` (splitmix64 finalizer).
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(seed, index))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Deterministic minimum over an ordered list of optional values.
fn ordered_min(vals: impl IntoIterator<Item = Option<f64>>) -> f64 {
    vals.into_iter().flatten().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
}

fn accept(s: &LocalSolution) -> Option<f64> {
    (s.violation <= ACCEPT_TOL && s.value.is_finite()).then_some(s.value)
}

fn subsets(q: usize) -> Vec<Vec<usize>> {
    (0..1usize << q).map(|mask| (0..q).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

/// Best distance found and how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct DistEstimate {
    pub value: f64,
    pub solves: usize,
    pub method: &'static str,
}

/// Lower-level data compiled over y.
struct LowerF {
    m: usize,
    g: Vec<FPoly>,
    grad: Vec<Vec<FPoly>>,
    /// `∂_j∂_l g_i`
    hess: Vec<Vec<Vec<FPoly>>>,
    /// `∂_j∂_l∂_r g_i`
    third: Vec<Vec<Vec<Vec<FPoly>>>>,
}

impl LowerF {
    fn new(p: &MpecProblem) -> Self {
        let ys: Vec<usize> = p.ys().collect();
        let m = p.m;
        let gy: Vec<Poly> = p.g.iter().map(|g| g.select_vars(&ys).expect("g depends on y only")).collect();
        let d1: Vec<Vec<Poly>> = gy.iter().map(|g| (0..m).map(|j| g.differentiate(j)).collect()).collect();
        let d2: Vec<Vec<Vec<Poly>>> =
            d1.iter().map(|gi| gi.iter().map(|gj| (0..m).map(|l| gj.differentiate(l)).collect()).collect()).collect();
        let compile = |v: &[Poly]| v.iter().map(FPoly::new).collect::<Vec<_>>();
        LowerF {
            m,
            grad: d1.iter().map(|gi| compile(gi)).collect(),
            hess: d2.iter().map(|gi| gi.iter().map(|gj| compile(gj)).collect()).collect(),
            third: d2
                .iter()
                .map(|gi| {
                    gi.iter()
                        .map(|gj| gj.iter().map(|gjl| (0..m).map(|r| FPoly::new(&gjl.differentiate(r))).collect()).collect())
                        .collect()
                })
                .collect(),
            g: gy.iter().map(FPoly::new).collect(),
        }
    }

    /// Exact derivatives of the graph-distance subproblem for active set `set`
    /// in `w = (y, λ_set)`; rows as built in [`dist_graph_with`].
    fn graph_derivs(&self, set: &[usize], w: &[f64], wt: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (m, q, s) = (self.m, self.q(), set.len());
        let n = m + s;
        let (y, lam) = w.split_at(m);
        let rows = 2 * m + q + s;
        let mut j = DMatrix::zeros(rows, n);
        let mut h = DMatrix::zeros(n, n);
        let grad: Vec<Vec<f64>> = self.grad.iter().map(|gi| gi.iter().map(|p| p.eval(y)).collect()).collect();
        let hess: Vec<Vec<Vec<f64>>> =
            self.hess.iter().map(|gi| gi.iter().map(|gj| gj.iter().map(|p| p.eval(y)).collect()).collect()).collect();
        for c in 0..m {
            j[(c, c)] = 1.0;
        }
        for r in 0..m {
            let row = m + r;
            for (k, &i) in set.iter().enumerate() {
                j[(row, m + k)] = grad[i][r];
                for l in 0..m {
                    j[(row, l)] += lam[k] * hess[i][r][l];
                    h[(l, m + k)] += wt[row] * hess[i][r][l];
                    h[(m + k, l)] += wt[row] * hess[i][r][l];
                    for c in 0..m {
                        h[(l, c)] += wt[row] * lam[k] * self.third[i][r][l][c].eval(y);
                    }
                }
            }
        }
        let others = (0..q).filter(|i| !set.contains(i));
        for (row, i) in (2 * m..).zip(set.iter().copied().chain(others)) {
            for l in 0..m {
                j[(row, l)] = grad[i][l];
                for c in 0..m {
                    h[(l, c)] += wt[row] * hess[i][l][c];
                }
            }
        }
        for k in 0..s {
            j[(2 * m + q + k, m + k)] = -1.0;
        }
        (j, h)
    }

    fn q(&self) -> usize {
        self.g.len()
    }

    fn values(&self, y: &[f64]) -> Vec<f64> {
        self.g.iter().map(|g| g.eval(y)).collect()
    }

    /// `Σ_k λ_k ∇g_{set[k]}(y)`.
    fn combo(&self, y: &[f64], set: &[usize], lam: &[f64]) -> Vec<f64> {
        (0..self.m).map(|j| set.iter().zip(lam).map(|(&i, l)| l * self.grad[i][j].eval(y)).sum()).collect()
    }

    /// Least-squares `λ ≥ 0` (clipped) for `Σ λ_k ∇g_{set[k]}(y) ≈ b`.
    fn ls_multiplier(&self, y: &[f64], set: &[usize], b: &[f64]) -> Vec<f64> {
        if set.is_empty() {
            return Vec::new();
        }
        let a = DMatrix::from_fn(self.m, set.len(), |j, k| self.grad[set[k]][j].eval(y));
        let svd = a.svd(true, true);
        match svd.solve(&DVector::from_column_slice(b), 1e-12) {
            Ok(s) => s.iter().map(|v| v.max(0.0)).collect(),
            Err(_) => vec![0.0; set.len()],
        }
    }
}

/// Distance from `(a, b)` to `gph N̂_Γ`, by active-set enumeration with
/// multistart local solves (`budget` solves in total, at least one per set).
pub fn dist_graph(p: &MpecProblem, a: &[f64], b: &[f64], budget: usize, seed: u64) -> DistEstimate {
    let lf = LowerF::new(p);
    dist_graph_with(&lf, a, b, budget, seed)
}

fn dist_graph_with(lf: &LowerF, a: &[f64], b: &[f64], budget: usize, seed: u64) -> DistEstimate {
    let (m, q) = (lf.m, lf.q());
    let sets = subsets(q);
    let per = (budget / sets.len()).max(1);
    let tasks: Vec<(usize, usize)> = (0..sets.len()).flat_map(|s| (0..per).map(move |k| (s, k))).collect();
    let scale_a = 1.0 + norm(a);
    let scale_b = 1.0 + norm(b);
    let opts = SolverOptions::default();
    let found: Vec<Option<f64>> = tasks
        .par_iter()
        .enumerate()
        .map(|(idx, &(s, k))| {
            let set = &sets[s];
            let residual = |w: &[f64]| {
                let (y, lam) = w.split_at(m);
                let mut r: Vec<f64> = y.iter().zip(a).map(|(u, v)| u - v).collect();
                r.extend(lf.combo(y, set, lam).iter().zip(b).map(|(u, v)| u - v));
                r
            };
            let eq = |w: &[f64]| set.iter().map(|&i| lf.g[i].eval(&w[..m])).collect();
            let ineq = |w: &[f64]| {
                let mut c: Vec<f64> = (0..q).filter(|i| !set.contains(i)).map(|i| lf.g[i].eval(&w[..m])).collect();
                c.extend(w[m..].iter().map(|l| -l));
                c
            };
            let derivs = |w: &[f64], wt: &[f64]| lf.graph_derivs(set, w, wt);
            let prob = LocalProblem { dim: m + set.len(), residual: &residual, eq: &eq, ineq: &ineq, derivs: Some(&derivs) };
            let mut x0 = a.to_vec();
            if k == 0 {
                x0.extend(lf.ls_multiplier(a, set, b));
            } else {
                let mut rng = rng_for(seed, idx as u64);
                let s = scale_a * 10f64.powi(-rng.gen_range(0..5));
                for v in x0.iter_mut() {
                    *v += s * rng.gen_range(-1.0..1.0);
                }
                x0.extend((0..set.len()).map(|_| scale_b * rng.gen_range(0.0..1.0)));
            }
            accept(&solve_local(&prob, &x0, &opts))
        })
        .collect();
    // (a, 0) lies on the graph whenever a ∈ Γ
    let trivial = lf.values(a).iter().all(|&v| v <= 0.0).then(|| norm(b));
    DistEstimate {
        value: ordered_min(found.into_iter().chain([trivial])),
        solves: tasks.len(),
        method: "active_set_multistart",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeVerdict {
    RatioVanishes,
    RatioBoundedAway,
    Inconclusive,
}

impl ProbeVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeVerdict::RatioVanishes => "RATIO_VANISHES",
            ProbeVerdict::RatioBoundedAway => "RATIO_BOUNDED_AWAY",
            ProbeVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOptions {
    pub t_schedule: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
    pub vanish_tol: f64,
    pub away_tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { t_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4], budget: 200, seed: 0, vanish_tol: 1e-3, away_tol: 1e-2 }
    }
}

/// Ratio table `dist(z̄ + t d, S) / t` with its classification.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub t: Vec<f64>,
    pub distance: Vec<f64>,
    pub ratio: Vec<f64>,
    pub budget: usize,
    pub solves: usize,
    pub seed: u64,
    pub verdict: ProbeVerdict,
}

impl ProbeReport {
    pub(crate) fn build(t: Vec<f64>, distance: Vec<f64>, solves: usize, opts: &ProbeOptions) -> Self {
        let ratio: Vec<f64> = distance.iter().zip(&t).map(|(d, t)| d / t).collect();
        let verdict = if ratio.last().is_some_and(|&r| r < opts.vanish_tol) {
            ProbeVerdict::RatioVanishes
        } else if !ratio.is_empty() && ratio.iter().all(|&r| r >= opts.away_tol) {
            ProbeVerdict::RatioBoundedAway
        } else {
            ProbeVerdict::Inconclusive
        };
        ProbeReport { t, distance, ratio, budget: opts.budget, solves, seed: opts.seed, verdict }
    }

    pub fn final_ratio(&self) -> f64 {
        self.ratio.last().copied().unwrap_or(0.0)
    }
}

/// Derivability probe of `gph N̂_Γ` at `(y, y*)` along `(v, v*)`.
pub fn tangent_ratio_probe(
    p: &MpecProblem,
    y: &[Rational],
    y_star: &[Rational],
    v: &[f64],
    v_star: &[f64],
    opts: &ProbeOptions,
) -> Result<ProbeReport, Error> {
    if y.len() != p.m || y_star.len() != p.m || v.len() != p.m || v_star.len() != p.m {
        return Err(Error::DimensionMismatch(format!("probe vectors must have length {}", p.m)));
    }
    LowerPoint::new(p, y).map_err(|e| Error::BaseNotOnGraph(e.to_string()))?;
    if multiplier_set(p, y, y_star)?.is_empty() {
        return Err(Error::BaseNotOnGraph("y* is not a normal vector at y".into()));
    }
    let (yf, sf) = (to_f64_vec(y), to_f64_vec(y_star));
    let lf = LowerF::new(p);
    let mut distance = Vec::new();
    let mut solves = 0;
    for (i, &t) in opts.t_schedule.iter().enumerate() {
        let a: Vec<f64> = yf.iter().zip(v).map(|(b, d)| b + t * d).collect();
        let b: Vec<f64> = sf.iter().zip(v_star).map(|(b, d)| b + t * d).collect();
        let d = dist_graph_with(&lf, &a, &b, opts.budget, sample_seed(opts.seed, i as u64));
        solves += d.solves;
        distance.push(d.value);
    }
    Ok(ProbeReport::build(opts.t_schedule.clone(), distance, solves, opts))
}

/// Upper-level data compiled over `z = (x, y)`, plus the MPCC system over
/// `(x, y, λ)`.
struct FeasibleSetF<'p> {
    p: &'p MpecProblem,
    lower: LowerF,
    big_g: Vec<FPoly>,
    h: Vec<FPoly>,
    /// Extreme points and rays of `Λ(ȳ, ȳ*)`, when nonempty.
    fibre: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

impl<'p> FeasibleSetF<'p> {
    fn new(p: &'p MpecProblem) -> Self {
        let fibre = multiplier_set(p, &p.y, &p.y_star()).ok().filter(|ms| !ms.is_empty()).map(|ms| {
            (ms.extreme.iter().map(|e| to_f64_vec(e)).collect(), ms.rays.iter().map(|r| to_f64_vec(r)).collect())
        });
        FeasibleSetF {
            p,
            lower: LowerF::new(p),
            big_g: p.big_g.iter().map(FPoly::new).collect(),
            h: build_mpcc(p).h.iter().map(FPoly::new).collect(),
            fibre,
        }
    }

    /// Distance from `lam` to `Λ(ȳ, ȳ*)` (convex, one solve suffices).
    fn dist_to_multipliers(&self, lam: &[f64]) -> Option<f64> {
        let (ext, rays) = self.fibre.as_ref()?;
        let (ne, nr) = (ext.len(), rays.len());
        let residual = |w: &[f64]| {
            (0..lam.len())
                .map(|i| {
                    let s: f64 = (0..ne).map(|k| w[k] * ext[k][i]).sum::<f64>()
                        + (0..nr).map(|k| w[ne + k] * rays[k][i]).sum::<f64>();
                    s - lam[i]
                })
                .collect()
        };
        let eq = |w: &[f64]| vec![w[..ne].iter().sum::<f64>() - 1.0];
        let ineq = |w: &[f64]| w.iter().map(|v| -v).collect();
        let prob = LocalProblem { dim: ne + nr, residual: &residual, eq: &eq, ineq: &ineq, derivs: None };
        let mut x0 = vec![1.0 / ne as f64; ne];
        x0.extend(vec![0.0; nr]);
        let s = solve_local(&prob, &x0, &SolverOptions::default());
        // the uniform start is feasible, so fall back to it
        Some(accept(&s).unwrap_or_else(|| norm(&residual(&x0))))
    }

    fn fibre_dist(&self, x: &[f64], y: &[f64], lam: Option<&[f64]>) -> Option<f64> {
        self.fibre.as_ref()?;
        let base = dist(x, &to_f64_vec(&self.p.x)).powi(2) + dist(y, &to_f64_vec(&self.p.y)).powi(2);
        let dl = match lam {
            Some(l) => self.dist_to_multipliers(l)?,
            None => 0.0,
        };
        Some((base + dl * dl).sqrt())
    }

    fn map_dist(&self, x: &[f64], y: &[f64], lam: Option<&[f64]>, radius: f64, budget: usize, seed: u64) -> (f64, usize) {
        let pieces = &self.p.solution_map;
        let n = self.p.n;
        let per_axis: usize = match n {
            1 => 401,
            2 => 41,
            3 => 13,
            4 => 7,
            _ => 3,
        };
        let total: usize = per_axis.pow(n as u32);
        let starts = (budget / pieces.len().max(1)).max(2);
        let h = (1e-3 * radius).clamp(1e-12, 1e-6);
        let opts = SolverOptions { fd_step: h, ..SolverOptions::default() };
        let mut best = f64::INFINITY;
        let mut solves = 0;
        for (pi, piece) in pieces.iter().enumerate() {
            let residual = |xp: &[f64]| {
                let (yp, lp) = piece.eval(xp);
                let mut r: Vec<f64> = xp.iter().zip(x).map(|(a, b)| a - b).collect();
                r.extend(yp.iter().zip(y).map(|(a, b)| a - b));
                if let Some(l) = lam {
                    r.extend(lp.iter().zip(l).map(|(a, b)| a - b));
                }
                r
            };
            let ineq = |xp: &[f64]| {
                let (yp, _) = piece.eval(xp);
                let mut z = xp.to_vec();
                z.extend(yp);
                let mut c = piece.region_values(xp);
                c.extend(self.big_g.iter().map(|g| g.eval(&z)));
                c
            };
            let feasible = |xp: &[f64]| ineq(xp).iter().all(|&c| c <= 0.0);
            let grid: Vec<(f64, Vec<f64>)> = (0..total)
                .into_par_iter()
                .filter_map(|idx| {
                    let mut rest = idx;
                    let xp: Vec<f64> = (0..n)
                        .map(|c| {
                            let k = rest % per_axis;
                            rest /= per_axis;
                            x[c] + radius * (2.0 * k as f64 / (per_axis - 1) as f64 - 1.0)
                        })
                        .collect();
                    let v = norm(&residual(&xp));
                    (v.is_finite() && feasible(&xp)).then_some((v, xp))
                })
                .collect();
            let mut ranked = grid;
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((v, _)) = ranked.first() {
                best = best.min(*v);
            }
            let mut seeds: Vec<Vec<f64>> = ranked.into_iter().take(starts).map(|(_, xp)| xp).collect();
            let mut rng = rng_for(seed, pi as u64);
            while seeds.len() < starts {
                seeds.push(x.iter().map(|c| c + radius * rng.gen_range(-1.0..1.0)).collect());
            }
            let found: Vec<Option<f64>> = seeds
                .par_iter()
                .map(|x0| {
                    let prob = LocalProblem { dim: n, residual: &residual, eq: &|_| Vec::new(), ineq: &ineq, derivs: None };
                    accept(&solve_local(&prob, x0, &opts))
                })
                .collect();
            solves += seeds.len();
            best = best.min(ordered_min(found));
        }
        (best, solves)
    }

    fn branch_dist(&self, x: &[f64], y: &[f64], lam: Option<&[f64]>, budget: usize, seed: u64) -> (f64, usize) {
        let (n, m, q) = (self.p.n, self.p.m, self.p.q);
        let sets = subsets(q);
        let per = (budget / sets.len()).max(1);
        let tasks: Vec<(usize, usize)> = (0..sets.len()).flat_map(|s| (0..per).map(move |k| (s, k))).collect();
        let scale = 1.0 + norm(x) + norm(y);
        let opts = SolverOptions::default();
        let found: Vec<Option<f64>> = tasks
            .par_iter()
            .enumerate()
            .map(|(idx, &(s, k))| {
                let beta = &sets[s];
                let residual = |w: &[f64]| {
                    let mut r: Vec<f64> = w[..n].iter().zip(x).map(|(a, b)| a - b).collect();
                    r.extend(w[n..n + m].iter().zip(y).map(|(a, b)| a - b));
                    if let Some(l) = lam {
                        r.extend(w[n + m..].iter().zip(l).map(|(a, b)| a - b));
                    }
                    r
                };
                let eq = |w: &[f64]| {
                    let mut c: Vec<f64> = self.h.iter().map(|h| h.eval(w)).collect();
                    let gv = self.lower.values(&w[n..n + m]);
                    for i in 0..q {
                        c.push(if beta.contains(&i) { gv[i] } else { w[n + m + i] });
                    }
                    c
                };
                let ineq = |w: &[f64]| {
                    let gv = self.lower.values(&w[n..n + m]);
                    let mut c: Vec<f64> =
                        (0..q).map(|i| if beta.contains(&i) { -w[n + m + i] } else { gv[i] }).collect();
                    c.extend(self.big_g.iter().map(|g| g.eval(&w[..n + m])));
                    c
                };
                let prob = LocalProblem { dim: n + m + q, residual: &residual, eq: &eq, ineq: &ineq, derivs: None };
                let mut x0: Vec<f64> = x.iter().chain(y).copied().collect();
                match lam {
                    Some(l) => x0.extend_from_slice(l),
                    None => x0.extend(vec![0.0; q]),
                }
                if k > 0 {
                    let mut rng = rng_for(seed, idx as u64);
                    let s = scale * 10f64.powi(-rng.gen_range(0..5));
                    for v in x0.iter_mut() {
                        *v += s * rng.gen_range(-1.0..1.0);
                    }
                }
                accept(&solve_local(&prob, &x0, &opts))
            })
            .collect();
        (ordered_min(found), tasks.len())
    }

    /// Distance from `(x, y[, λ])` to the feasible set (of the MPCC when
    /// `lam` is given, of the MPEC otherwise).
    fn distance(&self, x: &[f64], y: &[f64], lam: Option<&[f64]>, budget: usize, seed: u64) -> DistEstimate {
        let fib = self.fibre_dist(x, y, lam);
        if self.p.solution_map.is_empty() {
            let (v, solves) = self.branch_dist(x, y, lam, budget, seed);
            return DistEstimate { value: v.min(fib.unwrap_or(f64::INFINITY)), solves, method: "branch_multistart" };
        }
        let radius = fib.unwrap_or_else(|| 1.0 + norm(x) + norm(y)).max(1e-300);
        let (v, solves) = self.map_dist(x, y, lam, radius, budget, seed);
        DistEstimate { value: v.min(fib.unwrap_or(f64::INFINITY)), solves, method: "solution_map" }
    }
}

/// Distance from `z = (x, y, λ)` to the MPCC feasible set `Ω̃`.
///
/// With a solution map, `Ω̃` is the graph of the map over its regions plus
/// the fibre `{(x̄, ȳ)} × Λ(ȳ, ȳ*)`; the map is searched on a grid in a box
/// around `x` whose half-width is the fibre distance, then refined locally.
/// Without one, the complementarity branches are searched by multistart
/// (`method = "branch_multistart"`, a weaker upper bound).
pub fn dist_mpcc(p: &MpecProblem, z: &[f64], budget: usize, seed: u64) -> DistEstimate {
    assert_eq!(z.len(), p.n + p.m + p.q, "point lives in (x, y, λ)");
    let fs = FeasibleSetF::new(p);
    fs.distance(&z[..p.n], &z[p.n..p.n + p.m], Some(&z[p.n + p.m..]), budget, seed)
}

/// Distance from `(x, y)` to the MPEC feasible set.
pub fn dist_mpec(p: &MpecProblem, z: &[f64], budget: usize, seed: u64) -> DistEstimate {
    assert_eq!(z.len(), p.n + p.m, "point lives in (x, y)");
    let fs = FeasibleSetF::new(p);
    fs.distance(&z[..p.n], &z[p.n..], None, budget, seed)
}

/// Constraint systems whose error bound is probed.
#[derive(Clone, Copy, Debug)]
pub enum ResidualSystem<'a> {
    /// `P(z) ≤ 0`; residual `‖P(z)₊‖`.
    Inequality(&'a [Poly]),
    /// The MPEC system with residual `‖G₊‖ + dist(−φ, N̂_Γ(y))`.
    MpecGe(&'a MpecProblem),
    /// The MPEC system with residual `‖G₊‖ + dist((y, −φ), gph N̂_Γ)`.
    MpecGraph(&'a MpecProblem),
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBoundOptions {
    pub radii: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Multistart budget of each inner distance computation.
    pub budget: usize,
    /// `blow_up` when the last max ratio exceeds the first by this factor.
    pub growth_factor: f64,
}

impl Default for ErrorBoundOptions {
    fn default() -> Self {
        ErrorBoundOptions { radii: vec![1e-1, 1e-2, 1e-3], samples: 40, seed: 0, budget: 24, growth_factor: 10.0 }
    }
}

/// Estimates of `κ` in `dist(z, Ω) ≤ κ·residual(z)` on shrinking balls.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorBoundReport {
    pub radii: Vec<f64>,
    pub max_ratio: Vec<f64>,
    pub samples_used: Vec<usize>,
    pub growth: f64,
    pub blow_up: bool,
    pub seed: u64,
}

fn positive_part_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// `min_{λ ≥ 0} ‖Σ λ_i ∇g_i(y) + φ‖` over the constraints active at `y`.
fn dist_to_normal_cone(lf: &LowerF, y: &[f64], target: &[f64]) -> f64 {
    let gv = lf.values(y);
    if gv.iter().any(|&v| v > 0.0) {
        return f64::INFINITY;
    }
    let set: Vec<usize> = (0..lf.q()).filter(|&i| gv[i] >= -1e-12).collect();
    if set.is_empty() {
        return norm(target);
    }
    let residual = |lam: &[f64]| lf.combo(y, &set, lam).iter().zip(target).map(|(a, b)| a - b).collect();
    let ineq = |lam: &[f64]| lam.iter().map(|l| -l).collect();
    let prob = LocalProblem { dim: set.len(), residual: &residual, eq: &|_| Vec::new(), ineq: &ineq, derivs: None };
    let s = solve_local(&prob, &lf.ls_multiplier(y, &set, target), &SolverOptions::default());
    accept(&s).unwrap_or_else(|| norm(target)).min(norm(target))
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], r: f64) -> Vec<f64> {
    let d = center.len();
    let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nd = norm(&dir).max(1e-300);
    let rad = r * rng.gen_range(0.0f64..1.0).powf(1.0 / d as f64);
    center.iter().zip(&dir).map(|(c, u)| c + rad * u / nd).collect()
}

/// Samples points in balls of shrinking radius around the feasible `zbar`
/// and records the largest ratio `dist(z, Ω) / residual(z)` per radius.
pub fn error_bound_probe(sys: ResidualSystem<'_>, zbar: &[f64], opts: &ErrorBoundOptions) -> ErrorBoundReport {
    enum Compiled<'p> {
        Ineq(Vec<FPoly>),
        Mpec { fs: Box<FeasibleSetF<'p>>, phi: Vec<FPoly>, graph: bool },
    }
    let compiled = match sys {
        ResidualSystem::Inequality(ps) => Compiled::Ineq(ps.iter().map(FPoly::new).collect()),
        ResidualSystem::MpecGe(p) | ResidualSystem::MpecGraph(p) => Compiled::Mpec {
            fs: Box::new(FeasibleSetF::new(p)),
            phi: p.phi.iter().map(FPoly::new).collect(),
            graph: matches!(sys, ResidualSystem::MpecGraph(_)),
        },
    };
    let ratio_at = |z: &[f64], seed: u64| -> Option<f64> {
        let (res, d) = match &compiled {
            Compiled::Ineq(ps) => {
                let res = positive_part_norm(&ps.iter().map(|p| p.eval(z)).collect::<Vec<_>>());
                if res <= 1e-14 {
                    return None;
                }
                let residual = |w: &[f64]| w.iter().zip(z).map(|(a, b)| a - b).collect();
                let ineq = |w: &[f64]| ps.iter().map(|p| p.eval(w)).collect();
                let prob = LocalProblem { dim: z.len(), residual: &residual, eq: &|_| Vec::new(), ineq: &ineq, derivs: None };
                let mid: Vec<f64> = z.iter().zip(zbar).map(|(a, b)| 0.5 * (a + b)).collect();
                let opts = SolverOptions::default();
                let found = [z.to_vec(), mid].iter().map(|x0| accept(&solve_local(&prob, x0, &opts))).collect::<Vec<_>>();
                (res, ordered_min(found).min(dist(z, zbar)))
            }
            Compiled::Mpec { fs, phi, graph } => {
                let n = fs.p.n;
                let (x, y) = z.split_at(n);
                let big_g: Vec<f64> = fs.big_g.iter().map(|g| g.eval(z)).collect();
                let minus_phi: Vec<f64> = phi.iter().map(|f| -f.eval(z)).collect();
                let ge = if *graph {
                    dist_graph_with(&fs.lower, y, &minus_phi, opts.budget, seed).value
                } else {
                    dist_to_normal_cone(&fs.lower, y, &minus_phi)
                };
                let res = positive_part_norm(&big_g) + ge;
                if !res.is_finite() || res <= 1e-14 {
                    return None;
                }
                (res, fs.distance(x, y, None, opts.budget, seed).value.min(dist(z, zbar)))
            }
        };
        Some(d / res)
    };
    let mut max_ratio = Vec::new();
    let mut samples_used = Vec::new();
    for (ri, &r) in opts.radii.iter().enumerate() {
        let vals: Vec<Option<f64>> = (0..opts.samples)
            .into_par_iter()
            .map(|k| {
                let idx = (ri * opts.samples + k) as u64;
                let mut rng = rng_for(opts.seed, idx);
                let z = sample_ball(&mut rng, zbar, r);
                ratio_at(&z, sample_seed(opts.seed, idx))
            })
            .collect();
        samples_used.push(vals.iter().flatten().count());
        max_ratio.push(vals.into_iter().flatten().fold(0.0, f64::max));
    }
    let growth = match (max_ratio.first(), max_ratio.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        _ => 1.0,
    };
    ErrorBoundReport {
        radii: opts.radii.clone(),
        max_ratio,
        samples_used,
        growth,
        blow_up: growth > opts.growth_factor,
        seed: opts.seed,
    }
}
