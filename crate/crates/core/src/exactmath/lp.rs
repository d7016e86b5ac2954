//! Two-phase tableau simplex with Bland's rule.
//!
//! Variables are free; sign constraints are ordinary rows. Every outcome
//! carries a certificate: duals at optimality, a Farkas vector when
//! infeasible, an improving recession ray when unbounded.

use serde::Serialize;

use super::scalar::{dot, Scalar};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Sense {
    Min,
    Max,
}

/// `opt cᵀx  s.t.  Ax ≤ b, Cx = d`, x free.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<T> {
    pub c: Vec<T>,
    pub sense: Sense,
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub ceq: Vec<Vec<T>>,
    pub d: Vec<T>,
}

impl<T: Scalar> LpProblem<T> {
    /// Feasibility problem (zero objective) in `n` variables.
    pub fn new(n: usize) -> Self {
        Self::with_objective(vec![T::zero(); n], Sense::Min)
    }

    pub fn with_objective(c: Vec<T>, sense: Sense) -> Self {
        Self { c, sense, a: Vec::new(), b: Vec::new(), ceq: Vec::new(), d: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.a.push(row);
        self.b.push(rhs);
        self
    }

    pub fn add_ge(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.add_le(row.into_iter().map(|x| -x).collect(), -rhs)
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.ceq.push(row);
        self.d.push(rhs);
        self
    }

    /// `x_i ≥ 0`
    pub fn nonneg(&mut self, i: usize) -> &mut Self {
        let mut row = vec![T::zero(); self.nvars()];
        row[i] = -T::one();
        self.add_le(row, T::zero())
    }

    /// `x_i = 0`
    pub fn fix_zero(&mut self, i: usize) -> &mut Self {
        let mut row = vec![T::zero(); self.nvars()];
        row[i] = T::one();
        self.add_eq(row, T::zero())
    }

    fn check_dims(&self) -> Result<(), Error> {
        let n = self.nvars();
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inequality rows but {} right-hand sides",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.ceq.len() != self.d.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} equality rows but {} right-hand sides",
                self.ceq.len(),
                self.d.len()
            )));
        }
        for (i, r) in self.a.iter().chain(&self.ceq).enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "constraint row {i} has {} entries, objective has {n}",
                    r.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    /// `aᵀ y + Cᵀ z = c` and `bᵀy + dᵀz = value`; `y ≥ 0` for MAX, `y ≤ 0` for MIN.
    Optimal { primal: Vec<T>, value: T, dual_ineq: Vec<T>, dual_eq: Vec<T> },
    /// `y ≥ 0`, `Aᵀy + Cᵀz = 0`, `bᵀy + dᵀz < 0`.
    Infeasible { farkas_ineq: Vec<T>, farkas_eq: Vec<T> },
    /// `primal` feasible, `A ray ≤ 0`, `C ray = 0`, `cᵀray` improving.
    Unbounded { primal: Vec<T>, ray: Vec<T> },
}

impl<T: Scalar> LpOutcome<T> {
    pub fn status(&self) -> &'static str {
        match self {
            LpOutcome::Optimal { .. } => "OPTIMAL",
            LpOutcome::Infeasible { .. } => "INFEASIBLE",
            LpOutcome::Unbounded { .. } => "UNBOUNDED",
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }

    pub fn primal(&self) -> Option<&[T]> {
        match self {
            LpOutcome::Optimal { primal, .. } | LpOutcome::Unbounded { primal, .. } => Some(primal),
            LpOutcome::Infeasible { .. } => None,
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let inv = T::one() / self.rows[r][col].clone();
        for x in self.rows[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let prow = self.rows[r].clone();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[col].clone();
            if f.is_zero() {
                return;
            }
            for (x, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
            if !T::EXACT {
                row[col] = T::zero();
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = col;
    }

    /// Bland's rule; `Err(col)` when column `col` is an unbounded improving direction.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<(), usize> {
        loop {
            let Some(col) = (0..self.ncols).find(|&j| allowed(j) && self.obj[j].is_neg()) else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let d = (ratio.clone() - br.clone()).sign();
                        if d.is_lt() || (d.is_eq() && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return Err(col),
            }
        }
    }

    fn set_objective(&mut self, cost: &[T]) {
        self.obj = cost.to_vec();
        self.obj.push(T::zero());
        for i in 0..self.rows.len() {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (o, x) in self.obj.iter_mut().zip(&self.rows[i]) {
                *o = o.clone() - cb.clone() * x.clone();
            }
        }
    }

    fn values(&self) -> Vec<T> {
        let mut z = vec![T::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            z[b] = self.rhs(i).clone();
        }
        z
    }
}

/// Solve `p` exactly (or with the scalar's tolerance for floats).
pub fn lp_solve<T: Scalar>(p: &LpProblem<T>) -> Result<LpOutcome<T>, Error> {
    p.check_dims()?;
    let n = p.nvars();
    let ma = p.a.len();
    let me = p.ceq.len();
    let m = ma + me;

    // columns: x⁺ (n), x⁻ (n), slacks (ma), artificials (one per row needing one)
    let slack0 = 2 * n;
    let art0 = slack0 + ma;
    let mut flip = vec![false; m];
    let mut needs_art = vec![false; m];
    for i in 0..ma {
        if p.b[i].is_neg() {
            flip[i] = true;
            needs_art[i] = true;
        }
    }
    for k in 0..me {
        flip[ma + k] = p.d[k].is_neg();
        needs_art[ma + k] = true;
    }
    let mut art_col = vec![usize::MAX; m];
    let mut nart = 0;
    for i in 0..m {
        if needs_art[i] {
            art_col[i] = art0 + nart;
            nart += 1;
        }
    }
    let ncols = art0 + nart;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut init = Vec::with_capacity(m);
    for i in 0..m {
        let (coef, rhs) = if i < ma { (&p.a[i], &p.b[i]) } else { (&p.ceq[i - ma], &p.d[i - ma]) };
        let s = if flip[i] { -T::one() } else { T::one() };
        let mut row = vec![T::zero(); ncols + 1];
        for j in 0..n {
            row[j] = coef[j].clone() * s.clone();
            row[n + j] = -row[j].clone();
        }
        if i < ma {
            row[slack0 + i] = s.clone();
        }
        if needs_art[i] {
            row[art_col[i]] = T::one();
            basis.push(art_col[i]);
            init.push(art_col[i]);
        } else {
            basis.push(slack0 + i);
            init.push(slack0 + i);
        }
        row[ncols] = rhs.clone() * s;
        rows.push(row);
    }
    let mut tab = Tableau { rows, obj: Vec::new(), basis, ncols };
    let sigma = |i: usize| if flip[i] { -T::one() } else { T::one() };

    // Phase I
    if nart > 0 {
        let mut cost1 = vec![T::zero(); ncols];
        for c in cost1.iter_mut().skip(art0) {
            *c = T::one();
        }
        tab.set_objective(&cost1);
        tab.run(&|_| true).expect("phase I is bounded below by zero");
        let infeas = -tab.obj[ncols].clone();
        if infeas.is_pos() {
            // π_i = c_init_i − obj[init_i]; Farkas = −σπ
            let mut f: Vec<T> = (0..m)
                .map(|i| {
                    let pi = cost1[init[i]].clone() - tab.obj[init[i]].clone();
                    -(sigma(i) * pi)
                })
                .collect();
            if !T::EXACT {
                for (i, x) in f.iter_mut().enumerate() {
                    if i < ma && x.is_neg() {
                        *x = T::zero();
                    }
                }
            }
            T::normalize_direction(&mut f);
            let farkas_eq = f.split_off(ma);
            return Ok(LpOutcome::Infeasible { farkas_ineq: f, farkas_eq });
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] < art0 {
                continue;
            }
            if let Some(j) = (0..art0).find(|&j| !tab.rows[i][j].is_negligible()) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase II (min form)
    let mut cost2 = vec![T::zero(); ncols];
    for j in 0..n {
        let cj = match p.sense {
            Sense::Min => p.c[j].clone(),
            Sense::Max => -p.c[j].clone(),
        };
        cost2[j] = cj.clone();
        cost2[n + j] = -cj;
    }
    tab.set_objective(&cost2);
    let res = tab.run(&|j| j < art0);
    let z = tab.values();
    let primal: Vec<T> = (0..n).map(|j| z[j].clone() - z[n + j].clone()).collect();
    match res {
        Err(col) => {
            let mut dz = vec![T::zero(); ncols];
            dz[col] = T::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                dz[b] = -tab.rows[i][col].clone();
            }
            let mut ray: Vec<T> = (0..n).map(|j| dz[j].clone() - dz[n + j].clone()).collect();
            T::normalize_direction(&mut ray);
            Ok(LpOutcome::Unbounded { primal, ray })
        }
        Ok(()) => {
            let sign = match p.sense {
                Sense::Min => T::one(),
                Sense::Max => -T::one(),
            };
            let mut y: Vec<T> = (0..m)
                .map(|i| sign.clone() * sigma(i) * (-tab.obj[init[i]].clone()))
                .collect();
            if !T::EXACT {
                for x in y.iter_mut() {
                    if x.is_negligible() {
                        *x = T::zero();
                    }
                }
            }
            let dual_eq = y.split_off(ma);
            let value = dot(&p.c, &primal);
            Ok(LpOutcome::Optimal { primal, value, dual_ineq: y, dual_eq })
        }
    }
}

/// Feasible point of `{Ax ≤ b, Cx = d}` or `None`.
pub fn find_feasible<T: Scalar>(p: &LpProblem<T>) -> Result<Option<Vec<T>>, Error> {
    let mut q = p.clone();
    q.c = vec![T::zero(); p.nvars()];
    Ok(lp_solve(&q)?.primal().map(<[T]>::to_vec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{int, ints};
    use crate::Rational;

    #[test]
    fn one_constraint_max() {
        let mut p = LpProblem::with_objective(ints(&[1]), Sense::Max);
        p.add_le(ints(&[1]), int(1));
        match lp_solve(&p).unwrap() {
            LpOutcome::Optimal { primal, value, dual_ineq, .. } => {
                assert_eq!(primal, ints(&[1]));
                assert_eq!(value, int(1));
                assert_eq!(dual_ineq, ints(&[1]));
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn segment_multiplier_lp() {
        let mut p = LpProblem::with_objective(ints(&[1, 0]), Sense::Max);
        p.nonneg(0).nonneg(1).add_eq(ints(&[1, 1]), int(1));
        let out = lp_solve(&p).unwrap();
        assert_eq!(out.primal().unwrap(), &ints(&[1, 0])[..]);
        assert_eq!(out.value(), Some(&int(1)));
    }

    #[test]
    fn contradictory_bounds_give_farkas() {
        let mut p = LpProblem::<Rational>::new(1);
        p.add_le(ints(&[1]), int(-1)).add_le(ints(&[-1]), int(-1));
        match lp_solve(&p).unwrap() {
            LpOutcome::Infeasible { farkas_ineq, farkas_eq } => {
                assert_eq!(farkas_ineq, ints(&[1, 1]));
                assert!(farkas_eq.is_empty());
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::with_objective(ints(&[1, 1]), Sense::Max);
        p.nonneg(0).nonneg(1).add_le(ints(&[1, -1]), int(0));
        match lp_solve(&p).unwrap() {
            LpOutcome::Unbounded { ray, .. } => {
                assert!(dot(&ray, &ints(&[1, 1])) > int(0));
                assert!(dot(&ray, &ints(&[1, -1])) <= int(0));
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut p = LpProblem::<Rational>::new(2);
        p.add_le(ints(&[1]), int(0));
        assert!(matches!(lp_solve(&p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::with_objective(ints(&[1, 2]), Sense::Min);
        p.nonneg(0).nonneg(1).add_eq(ints(&[1, 1]), int(1)).add_eq(ints(&[2, 2]), int(2));
        assert_eq!(lp_solve(&p).unwrap().value(), Some(&int(1)));
    }

    #[test]
    fn float_instance() {
        let mut p = LpProblem::with_objective(vec![1.0, 1.0], Sense::Max);
        p.add_le(vec![1.0, 2.0], 4.0).add_le(vec![3.0, 1.0], 6.0).nonneg(0).nonneg(1);
        let v: f64 = *lp_solve(&p).unwrap().value().unwrap();
        assert!((v - 2.8).abs() < 1e-9);
    }
}
