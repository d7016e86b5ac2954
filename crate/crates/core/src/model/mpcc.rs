//! The MPCC reformulation: the lower-level problem replaced by its KKT system.

use super::poly::Poly;
use super::problem::MpecProblem;
use crate::Rational;

/// `h(x,y,λ) = φ(x,y) + ∇g(y)ᵀλ = 0`, `g(y) ≤ 0 ≤ λ` complementary,
/// `G(x,y) ≤ 0`; all polynomials over `(x, y, λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpccSystem {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub h: Vec<Poly>,
    /// Complementarity pairs `(g_i, −λ_i)`: both ≤ 0, product zero.
    pub pairs: Vec<(Poly, Poly)>,
    pub big_g: Vec<Poly>,
}

impl MpccSystem {
    pub fn nvars(&self) -> usize {
        self.n + self.m + self.q
    }

    /// Names `x1.., y1.., l1..`.
    pub fn names(&self) -> Vec<String> {
        let mut v = super::problem::variable_names(self.n, self.m);
        v.extend((1..=self.q).map(|i| format!("l{i}")));
        v
    }

    pub fn h_at(&self, w: &[Rational]) -> Vec<Rational> {
        self.h.iter().map(|p| p.evaluate(w)).collect()
    }
}

pub fn build_mpcc(p: &MpecProblem) -> MpccSystem {
    let nz = p.nz();
    let nw = nz + p.q;
    let lift: Vec<usize> = (0..nz).collect();
    let h = p
        .phi
        .iter()
        .enumerate()
        .map(|(j, phi)| {
            let mut hj = phi.embed(nw, &lift);
            for (i, gi) in p.g.iter().enumerate() {
                let d = gi.differentiate(p.n + j).embed(nw, &lift);
                hj = &hj + &(&d * &Poly::var(nw, nz + i));
            }
            hj
        })
        .collect();
    let pairs = p
        .g
        .iter()
        .enumerate()
        .map(|(i, gi)| (gi.embed(nw, &lift), -Poly::var(nw, nz + i)))
        .collect();
    let big_g = p.big_g.iter().map(|gg| gg.embed(nw, &lift)).collect();
    MpccSystem { n: p.n, m: p.m, q: p.q, h, pairs, big_g }
}
