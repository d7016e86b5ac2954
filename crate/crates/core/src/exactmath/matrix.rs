use std::fmt;

use serde::Serialize;

use super::scalar::{dot, Scalar};
use crate::Error;

/// Dense row-major matrix over a [`Scalar`] field.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from rows; every row must have `cols` entries.
    pub fn from_rows(cols: usize, rows: Vec<Vec<T>>) -> Result<Self, Error> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self { rows: n, cols, data })
    }

    /// Like [`Matrix::from_rows`] but panics on ragged input; for internal use.
    pub fn from_rows_unchecked(cols: usize, rows: Vec<Vec<T>>) -> Self {
        Self::from_rows(cols, rows).expect("ragged matrix rows")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn push_row(&mut self, row: Vec<T>) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matrix-vector shape");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows, "transposed matrix-vector shape");
        let mut out = vec![T::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = o.clone() + a.clone() * vi.clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                }
            }
        }
        out
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_rows_unchecked(self.cols, idx.iter().map(|&i| self.row(i).to_vec()).collect())
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Self { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            // largest magnitude pivot keeps the float path stable; exact path is unaffected
            let mut best: Option<usize> = None;
            for i in r..m.rows {
                if m[(i, c)].is_negligible() {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) if !T::EXACT && m[(i, c)].abs() > m[(b, c)].abs() => best = Some(i),
                    _ => {}
                }
            }
            let Some(p) = best else { continue };
            m.swap_rows(r, p);
            let inv = T::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = m[(r, j)].clone() * f.clone();
                    m[(i, j)] = m[(i, j)].clone() - v;
                }
                if !T::EXACT {
                    m[(i, c)] = T::zero();
                }
            }
            pivots.push(c);
            r += 1;
        }
        if !T::EXACT {
            for x in m.data.iter_mut() {
                if x.is_negligible() {
                    *x = T::zero();
                }
            }
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : self · v = 0}`, one vector per free column of the RREF.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![None; self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            is_pivot[c] = Some(row);
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free].is_some() {
                continue;
            }
            let mut v = vec![T::zero(); self.cols];
            v[free] = T::one();
            for (row, &c) in pivots.iter().enumerate() {
                v[c] = -r[(row, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Solve `self · x = b` for one particular solution, if any.
    pub fn solve_any(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![T::zero(); self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            x[c] = r[(row, self.cols)].clone();
        }
        Some(x)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let parts: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", parts.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Result of [`linear_basis`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearBasis<T> {
    pub rank: usize,
    pub nullspace_basis: Vec<Vec<T>>,
    pub row_independent: bool,
}

/// Rank, right nullspace and row independence of `m`.
pub fn linear_basis<T: Scalar>(m: &Matrix<T>) -> LinearBasis<T> {
    let rank = m.rank();
    LinearBasis {
        rank,
        nullspace_basis: m.nullspace(),
        row_independent: rank == m.nrows(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{int, ints};
    use crate::Rational;

    fn mat(cols: usize, rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(cols, rows.iter().map(|r| ints(r)).collect()).unwrap()
    }

    #[test]
    fn identity_has_full_rank() {
        let lb = linear_basis(&Matrix::<Rational>::identity(3));
        assert_eq!(lb.rank, 3);
        assert!(lb.nullspace_basis.is_empty());
        assert!(lb.row_independent);
    }

    #[test]
    fn repeated_gradient_rows_are_dependent() {
        let lb = linear_basis(&mat(3, &[&[0, 0, 1], &[0, 0, 1]]));
        assert_eq!(lb.rank, 1);
        assert!(!lb.row_independent);
        assert_eq!(lb.nullspace_basis.len(), 2);
    }

    #[test]
    fn nullspace_of_coordinate_projection() {
        let lb = linear_basis(&mat(3, &[&[1, 0, 0], &[0, 1, 0]]));
        assert_eq!(lb.nullspace_basis, vec![ints(&[0, 0, 1])]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = Matrix::<Rational>::from_rows(2, vec![ints(&[1, 2]), ints(&[1])]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn solve_particular() {
        let m = mat(2, &[&[1, 1], &[2, 2]]);
        let x = m.solve_any(&[int(1), int(2)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![int(1), int(2)]);
        assert!(m.solve_any(&[int(1), int(3)]).is_none());
    }

    #[test]
    fn float_rank() {
        let m = Matrix::from_rows(2, vec![vec![1.0, 2.0], vec![2.0, 4.0 + 1e-12]]).unwrap();
        assert_eq!(m.rank(), 1);
    }
}
