//! Sign of a quadratic form on a polyhedral cone by simplicial subdivision.
//!
//! A non-pointed cone is split into the pointed pieces obtained by fixing the
//! sign of each lineality basis vector. On a piece with generators `g_1..g_k`
//! every point is a positive multiple of `Σ c_i g_i`, `c` in the standard
//! simplex; cells of that simplex are checked via the matrix
//! `M_ij = u_iᵀ Q u_j` of their vertex images. A cell is accepted when `M` is
//! entrywise nonnegative and `M_ii > 0` at every vertex whose image meets the
//! qualifier subspace: then `xᵀQx ≥ c_i² M_ii > 0` for every qualifying `x`
//! in the cell. Otherwise the longest edge (in image space) is bisected.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::exactmath::matrix::Matrix;
use crate::exactmath::rational::mat_json;
use crate::exactmath::scalar::{dot, sub, Scalar};
use crate::Rational;

#[derive(Clone, Debug)]
pub struct QuadFormQuery {
    /// Symmetric d×d.
    pub q: Matrix<Rational>,
    pub rays: Vec<Vec<Rational>>,
    pub lineality: Vec<Vec<Rational>>,
    /// Basis of the qualifier subspace S; `None` means the whole space.
    pub qualifier: Option<Vec<Vec<Rational>>>,
    /// Maximum bisections along one branch.
    pub depth: usize,
    /// Maximum number of cells examined in total.
    pub max_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PieceCertificate {
    pub generators: Vec<Vec<Rational>>,
    /// Accepted leaf cells, each as barycentric coordinates of its vertices.
    pub cells: Vec<Vec<Vec<Rational>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuadSign {
    /// `xᵀQx > 0` for all `x ∈ C` with nonzero S-projection.
    Positive(Vec<PieceCertificate>),
    /// `x ∈ C`, nonzero S-projection, `xᵀQx ≤ 0`.
    Witness(Vec<Rational>),
    Unknown(String),
}

impl QuadSign {
    pub fn label(&self) -> &'static str {
        match self {
            QuadSign::Positive(_) => "POSITIVE",
            QuadSign::Witness(_) => "WITNESS",
            QuadSign::Unknown(_) => "UNKNOWN",
        }
    }
}

pub fn form(q: &Matrix<Rational>, x: &[Rational]) -> Rational {
    dot(x, &q.mul_vec(x))
}

fn bilinear(q: &Matrix<Rational>, x: &[Rational], y: &[Rational]) -> Rational {
    dot(x, &q.mul_vec(y))
}

impl QuadFormQuery {
    pub fn new(q: Matrix<Rational>, rays: Vec<Vec<Rational>>, lineality: Vec<Vec<Rational>>) -> Self {
        QuadFormQuery { q, rays, lineality, qualifier: None, depth: 12, max_cells: 1 << 20 }
    }

    pub fn with_qualifier(mut self, basis: Vec<Vec<Rational>>) -> Self {
        self.qualifier = Some(basis);
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn qualifies(&self, x: &[Rational]) -> bool {
        match &self.qualifier {
            None => x.iter().any(|v| !v.is_zero()),
            Some(b) => b.iter().any(|s| !dot(s, x).is_zero()),
        }
    }

    /// Generator lists of the pointed pieces, in sign-pattern order (+ before −).
    pub fn pieces(&self) -> Vec<Vec<Vec<Rational>>> {
        let d = self.lineality.len();
        (0..1usize << d)
            .map(|mask| {
                let mut g = self.rays.clone();
                for (j, l) in self.lineality.iter().enumerate() {
                    if mask >> j & 1 == 0 {
                        g.push(l.clone());
                    } else {
                        g.push(l.iter().map(|x| -x.clone()).collect());
                    }
                }
                g
            })
            .collect()
    }

    fn image(gens: &[Vec<Rational>], c: &[Rational]) -> Vec<Rational> {
        let mut u = vec![Rational::zero(); gens[0].len()];
        for (ci, g) in c.iter().zip(gens) {
            if ci.is_zero() {
                continue;
            }
            for (a, b) in u.iter_mut().zip(g) {
                *a += ci * b;
            }
        }
        u
    }

    fn accepted(&self, images: &[Vec<Rational>]) -> bool {
        for (i, ui) in images.iter().enumerate() {
            let d = form(&self.q, ui);
            if d.is_negative() || (self.qualifies(ui) && !d.is_positive()) {
                return false;
            }
            for uj in &images[i + 1..] {
                if bilinear(&self.q, ui, uj).is_negative() {
                    return false;
                }
            }
        }
        true
    }
}

pub fn quadratic_form_sign_on_cone(query: &QuadFormQuery) -> QuadSign {
    let mut certs = Vec::new();
    let mut examined = 0usize;
    let mut unresolved = 0usize;
    for gens in query.pieces() {
        let gens: Vec<Vec<Rational>> = gens.into_iter().filter(|g| g.iter().any(|x| !x.is_zero())).collect();
        if gens.is_empty() {
            certs.push(PieceCertificate { generators: gens, cells: Vec::new() });
            continue;
        }
        let k = gens.len();
        let start: Vec<Vec<Rational>> = Matrix::<Rational>::identity(k).row_vecs();
        let mut stack = vec![(start, 0usize)];
        let mut leaves = Vec::new();
        while let Some((cell, depth)) = stack.pop() {
            examined += 1;
            if examined > query.max_cells {
                return QuadSign::Unknown(format!("cell limit {} exhausted", query.max_cells));
            }
            let images: Vec<Vec<Rational>> = cell.iter().map(|c| QuadFormQuery::image(&gens, c)).collect();
            for u in &images {
                if query.qualifies(u) && !form(&query.q, u).is_positive() {
                    let mut w = u.clone();
                    Rational::normalize_direction(&mut w);
                    return QuadSign::Witness(w);
                }
            }
            if query.accepted(&images) {
                leaves.push(cell);
                continue;
            }
            if depth >= query.depth {
                unresolved += 1;
                continue;
            }
            // longest edge in image space
            let mut best = (0, 1, Rational::from_integer((-1).into()));
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    let d = sub(&images[a], &images[b]);
                    let len = dot(&d, &d);
                    if len > best.2 {
                        best = (a, b, len);
                    }
                }
            }
            let (a, b, _) = best;
            let half = Rational::new(1.into(), 2.into());
            let mid: Vec<Rational> =
                cell[a].iter().zip(&cell[b]).map(|(x, y)| (x + y) * half.clone()).collect();
            let mut left = cell.clone();
            left[b] = mid.clone();
            let mut right = cell;
            right[a] = mid;
            stack.push((right, depth + 1));
            stack.push((left, depth + 1));
        }
        certs.push(PieceCertificate { generators: gens, cells: leaves });
    }
    if unresolved > 0 {
        QuadSign::Unknown(format!("{unresolved} cells unresolved at depth {}", query.depth))
    } else {
        QuadSign::Positive(certs)
    }
}

/// Independent re-check of a POSITIVE certificate: every piece is present,
/// every leaf passes the acceptance test, and the leaves' barycentric volumes
/// add up to the whole simplex (bisection halves volume exactly).
pub fn verify_positive(query: &QuadFormQuery, certs: &[PieceCertificate]) -> bool {
    let pieces = query.pieces();
    if pieces.len() != certs.len() {
        return false;
    }
    pieces.iter().zip(certs).all(|(gens, cert)| {
        let gens: Vec<Vec<Rational>> = gens.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
        if gens != cert.generators {
            return false;
        }
        if gens.is_empty() {
            return true;
        }
        let mut volume = Rational::zero();
        for cell in &cert.cells {
            let images: Vec<Vec<Rational>> = cell.iter().map(|c| QuadFormQuery::image(&gens, c)).collect();
            if !query.accepted(&images) {
                return false;
            }
            volume += det(cell).abs();
        }
        volume.is_one()
    })
}

fn det(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let mut d = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let piv = a[col][col].clone();
        d *= piv.clone();
        for r in col + 1..n {
            let f = a[r][col].clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let t = a[col][c].clone() * f.clone();
                a[r][c] -= t;
            }
        }
    }
    d
}

pub fn certificate_json(certs: &[PieceCertificate]) -> Value {
    json!({
        "pieces": certs.iter().map(|c| json!({
            "generators": mat_json(&c.generators),
            "cells": c.cells.len(),
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::ints;

    fn diag(v: &[i64]) -> Matrix<Rational> {
        let n = v.len();
        let mut m = Matrix::<Rational>::zeros(n, n);
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] = Rational::from_integer((*x).into());
        }
        m
    }

    #[test]
    fn positive_on_plane() {
        let q = QuadFormQuery::new(diag(&[2, 1, 0]), vec![], vec![ints(&[1, 0, 0]), ints(&[0, 1, 0])]);
        match quadratic_form_sign_on_cone(&q) {
            QuadSign::Positive(c) => assert!(verify_positive(&q, &c)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn indefinite_on_orthant() {
        let q = QuadFormQuery::new(diag(&[1, -1]), vec![ints(&[1, 0]), ints(&[0, 1])], vec![]);
        assert_eq!(quadratic_form_sign_on_cone(&q), QuadSign::Witness(ints(&[0, 1])));
    }

    #[test]
    fn zero_diagonal_gives_witness() {
        let m = Matrix::from_rows(2, vec![ints(&[0, 1]), ints(&[1, 0])]).unwrap();
        let q = QuadFormQuery::new(m, vec![ints(&[1, 0]), ints(&[0, 1])], vec![]).with_depth(0);
        assert_eq!(quadratic_form_sign_on_cone(&q), QuadSign::Witness(ints(&[1, 0])));
    }

    #[test]
    fn subdivision_needed() {
        // x² − x·y + y² on the quadrant: vertices positive, cross term negative
        let m = Matrix::from_rows(2, vec![vec![Rational::from_integer(1.into()), Rational::new((-1).into(), 2.into())], vec![Rational::new((-1).into(), 2.into()), Rational::from_integer(1.into())]]).unwrap();
        let q = QuadFormQuery::new(m.clone(), vec![ints(&[1, 0]), ints(&[0, 1])], vec![]);
        match quadratic_form_sign_on_cone(&q) {
            QuadSign::Positive(c) => {
                assert!(c[0].cells.len() > 1);
                assert!(verify_positive(&q, &c));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(quadratic_form_sign_on_cone(&QuadFormQuery::new(m, vec![ints(&[1, 0]), ints(&[0, 1])], vec![]).with_depth(0)), QuadSign::Unknown(_)));
    }

    #[test]
    fn qualifier_ignores_orthogonal_directions() {
        // form w² on cone {(w, η) : η ≥ 0}; points (0, η) have value 0 but
        // lie outside the qualifier
        let q = QuadFormQuery::new(diag(&[1, 0]), vec![ints(&[0, 1])], vec![ints(&[1, 0])])
            .with_qualifier(vec![ints(&[1, 0])]);
        assert!(matches!(quadratic_form_sign_on_cone(&q), QuadSign::Positive(_)));
        let full = QuadFormQuery::new(diag(&[1, 0]), vec![ints(&[0, 1])], vec![ints(&[1, 0])]);
        assert_eq!(quadratic_form_sign_on_cone(&full), QuadSign::Witness(ints(&[0, 1])));
    }

    #[test]
    fn trivial_cone_is_vacuous() {
        let q = QuadFormQuery::new(diag(&[-1]), vec![], vec![]);
        assert!(matches!(quadratic_form_sign_on_cone(&q), QuadSign::Positive(_)));
    }
}
