//! The field abstraction shared by every linear-algebra routine.
//!
//! Exact types (`BigRational`) answer sign questions exactly; the float
//! implementations use a fixed absolute tolerance so the same simplex and
//! double-description code can run on `f64` for quick experiments.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// An ordered field usable by the LP solver, rank computations and the
/// double description method.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `true` when sign decisions are made without rounding.
    const EXACT: bool;

    /// Zero test; exact for rationals, tolerance based for floats.
    fn is_negligible(&self) -> bool;

    /// Sign with the same zero convention as [`Scalar::is_negligible`].
    fn sign(&self) -> Ordering {
        if self.is_negligible() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    fn is_pos(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    fn is_neg(&self) -> bool {
        self.sign() == Ordering::Less
    }

    fn from_rational(r: &Rational) -> Self;

    fn from_ints(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Rescale a nonzero direction to a canonical representative of its ray.
    ///
    /// Rationals become primitive integer vectors, floats get unit max-norm.
    fn normalize_direction(v: &mut [Self]);
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn normalize_direction(v: &mut [Self]) {
        if v.iter().all(Zero::is_zero) {
            return;
        }
        let mut lcm = BigInt::one();
        for x in v.iter() {
            lcm = lcm.lcm(x.denom());
        }
        let mut gcd = BigInt::zero();
        for x in v.iter() {
            let scaled = x.numer() * (&lcm / x.denom());
            gcd = gcd.gcd(&scaled);
        }
        for x in v.iter_mut() {
            let scaled = x.numer() * (&lcm / x.denom());
            *x = BigRational::from_integer(scaled / &gcd);
        }
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn is_negligible(&self) -> bool {
                self.abs() <= $tol
            }

            fn from_rational(r: &Rational) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }

            fn normalize_direction(v: &mut [Self]) {
                let m = v.iter().fold(0.0 as $t, |acc, x| acc.max(x.abs()));
                if m > 0.0 {
                    for x in v.iter_mut() {
                        *x /= m;
                        if x.is_negligible() {
                            *x = 0.0;
                        }
                    }
                }
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn is_zero_vec<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(Scalar::is_negligible)
}

pub fn scale<T: Scalar>(v: &[T], s: &T) -> Vec<T> {
    v.iter().map(|x| x.clone() * s.clone()).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn neg<T: Scalar>(a: &[T]) -> Vec<T> {
    a.iter().map(|x| -x.clone()).collect()
}

/// Lexicographic comparison with the scalar's zero convention.
pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match (x.clone() - y.clone()).sign() {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub fn vec_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && lex_cmp(a, b) == Ordering::Equal
}

pub fn zeros<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::zero(); n]
}

pub fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut v = zeros(n);
    v[i] = T::one();
    v
}

pub fn convert_vec<T: Scalar>(v: &[Rational]) -> Vec<T> {
    v.iter().map(T::from_rational).collect()
}

pub fn to_f64_vec<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(Scalar::to_f64_lossy).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn rational_direction_becomes_primitive() {
        let mut v = vec![r(1, 2), r(-3, 4), r(0, 1)];
        Rational::normalize_direction(&mut v);
        assert_eq!(v, vec![r(2, 1), r(-3, 1), r(0, 1)]);
    }

    #[test]
    fn float_tolerance_zero() {
        assert!(1e-12f64.is_negligible());
        assert_eq!((-1e-3f64).sign(), Ordering::Less);
    }

    #[test]
    fn lexicographic_order() {
        assert_eq!(lex_cmp(&[r(0, 1), r(1, 1)], &[r(1, 1), r(0, 1)]), Ordering::Less);
    }
}
