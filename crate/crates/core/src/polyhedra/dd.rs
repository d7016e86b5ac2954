//! Double description method for cones `{x : Ax ≤ 0, Cx = 0}`.
//!
//! Lineality is carried explicitly: while an inequality is not orthogonal to
//! the current lineality space, one lineality vector is turned into a ray and
//! the rest are projected; afterwards the cone modulo lineality is pointed and
//! the classical pairwise step applies, with adjacency decided by the
//! combinatorial zero-set test.

use crate::exactmath::matrix::Matrix;
use crate::exactmath::scalar::{dot, lex_cmp, vec_eq, Scalar};

/// Extreme rays and a lineality basis, both canonical.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeGens<T> {
    pub rays: Vec<Vec<T>>,
    pub lineality: Vec<Vec<T>>,
}

impl<T: Scalar> ConeGens<T> {
    pub fn is_trivial(&self) -> bool {
        self.rays.is_empty() && self.lineality.is_empty()
    }
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn subset_of(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & !b == 0)
    }
}

fn axpy<T: Scalar>(y: &mut [T], a: &T, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi = yi.clone() + a.clone() * xi.clone();
        }
    }
}

/// Generators of `{x ∈ ℝ^dim : a·x ≤ 0 (a ∈ ineq), c·x = 0 (c ∈ eq)}`.
pub fn dd_cone<T: Scalar>(dim: usize, ineq: &[Vec<T>], eq: &[Vec<T>]) -> ConeGens<T> {
    let mut lin: Vec<Vec<T>> = if eq.is_empty() {
        Matrix::<T>::identity(dim).row_vecs()
    } else {
        Matrix::from_rows_unchecked(dim, eq.to_vec()).nullspace()
    };
    let mut rays: Vec<Vec<T>> = Vec::new();
    let mut processed: Vec<&Vec<T>> = Vec::new();

    for a in ineq {
        if a.iter().all(Scalar::is_negligible) {
            continue;
        }
        if let Some(k) = lin.iter().position(|l| !dot(a, l).is_negligible()) {
            let l0 = lin.remove(k);
            let s = dot(a, &l0);
            for l in lin.iter_mut() {
                let f = -(dot(a, l) / s.clone());
                axpy(l, &f, &l0);
            }
            for r in rays.iter_mut() {
                let f = -(dot(a, r) / s.clone());
                axpy(r, &f, &l0);
                T::normalize_direction(r);
            }
            let mut nr = if s.is_neg() { l0 } else { l0.into_iter().map(|x| -x).collect() };
            T::normalize_direction(&mut nr);
            rays.push(nr);
            processed.push(a);
            continue;
        }

        let vals: Vec<T> = rays.iter().map(|r| dot(a, r)).collect();
        if !vals.iter().any(Scalar::is_pos) {
            processed.push(a);
            continue;
        }
        let zsets: Vec<Bits> = rays
            .iter()
            .map(|r| {
                let mut b = Bits::new(processed.len());
                for (i, row) in processed.iter().enumerate() {
                    if dot(row, r).is_negligible() {
                        b.set(i);
                    }
                }
                b
            })
            .collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_pos()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_neg()).collect();
        let mut next: Vec<Vec<T>> = (0..rays.len())
            .filter(|&i| !vals[i].is_pos())
            .map(|i| rays[i].clone())
            .collect();
        for &p in &pos {
            for &n in &neg {
                let common = zsets[p].and(&zsets[n]);
                let blocked = (0..rays.len())
                    .any(|r| r != p && r != n && common.subset_of(&zsets[r]));
                if blocked {
                    continue;
                }
                let mut nr = vec![T::zero(); dim];
                axpy(&mut nr, &vals[p], &rays[n]);
                axpy(&mut nr, &(-vals[n].clone()), &rays[p]);
                T::normalize_direction(&mut nr);
                next.push(nr);
            }
        }
        rays = next;
        processed.push(a);
    }
    canonicalize(dim, rays, lin)
}

/// Canonical lineality basis (RREF rows, primitive) and rays projected onto
/// its orthogonal complement, normalized, deduplicated and sorted
/// lexicographically descending.
pub fn canonicalize<T: Scalar>(dim: usize, rays: Vec<Vec<T>>, lin: Vec<Vec<T>>) -> ConeGens<T> {
    let lineality = canonical_subspace(dim, lin);
    let mut out: Vec<Vec<T>> = Vec::new();
    for r in rays {
        let mut p = project_out(&r, &lineality);
        if p.iter().all(Scalar::is_negligible) {
            continue;
        }
        T::normalize_direction(&mut p);
        if !out.iter().any(|q| vec_eq(q, &p)) {
            out.push(p);
        }
    }
    sort_desc(&mut out);
    ConeGens { rays: out, lineality }
}

pub fn sort_desc<T: Scalar>(v: &mut [Vec<T>]) {
    v.sort_by(|a, b| lex_cmp(b, a));
}

/// RREF basis of `span(vectors)`, each row scaled to a primitive vector.
pub fn canonical_subspace<T: Scalar>(dim: usize, vectors: Vec<Vec<T>>) -> Vec<Vec<T>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let (r, piv) = Matrix::from_rows_unchecked(dim, vectors).rref();
    (0..piv.len())
        .map(|i| {
            let mut row = r.row(i).to_vec();
            T::normalize_direction(&mut row);
            row
        })
        .collect()
}

/// Orthogonal projection of `v` onto the complement of `span(basis)`.
pub fn project_out<T: Scalar>(v: &[T], basis: &[Vec<T>]) -> Vec<T> {
    if basis.is_empty() {
        return v.to_vec();
    }
    let k = basis.len();
    let mut gram = Matrix::<T>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = dot(&basis[i], &basis[j]);
        }
    }
    let rhs: Vec<T> = basis.iter().map(|b| dot(b, v)).collect();
    let c = gram.solve_any(&rhs).expect("Gram matrix of a basis is nonsingular");
    let mut out = v.to_vec();
    for (ci, b) in c.iter().zip(basis) {
        axpy(&mut out, &(-ci.clone()), b);
    }
    if !T::EXACT {
        for x in out.iter_mut() {
            if x.is_negligible() {
                *x = T::zero();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::ints;
    use crate::Rational;

    #[test]
    fn nonnegative_quadrant() {
        let g = dd_cone::<Rational>(2, &[ints(&[-1, 0]), ints(&[0, -1])], &[]);
        assert_eq!(g.rays, vec![ints(&[1, 0]), ints(&[0, 1])]);
        assert!(g.lineality.is_empty());
    }

    #[test]
    fn halfspace_has_lineality() {
        let g = dd_cone::<Rational>(3, &[ints(&[0, 0, 1])], &[]);
        assert_eq!(g.lineality, vec![ints(&[1, 0, 0]), ints(&[0, 1, 0])]);
        assert_eq!(g.rays, vec![ints(&[0, 0, -1])]);
    }

    #[test]
    fn zero_cone() {
        let g = dd_cone::<Rational>(2, &[], &[ints(&[1, 0]), ints(&[0, 1])]);
        assert!(g.is_trivial());
    }

    #[test]
    fn square_pyramid_has_four_rays() {
        // |x| ≤ z, |y| ≤ z
        let rows = vec![ints(&[1, 0, -1]), ints(&[-1, 0, -1]), ints(&[0, 1, -1]), ints(&[0, -1, -1])];
        let g = dd_cone::<Rational>(3, &rows, &[]);
        assert_eq!(g.rays.len(), 4);
        assert!(g.lineality.is_empty());
    }

    #[test]
    fn float_dd_matches() {
        let g = dd_cone::<f64>(2, &[vec![-1.0, 0.0], vec![0.0, -1.0]], &[]);
        assert_eq!(g.rays.len(), 2);
    }
}
