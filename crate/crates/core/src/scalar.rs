//! Exact ordered-field scalars.
//!
//! Every solver in this crate is generic over [`Scalar`]. The trait is only
//! implemented for exact rational types: comparisons such as `4/3 < 3/2` and
//! the rounding floors of the LP pipeline are decided with equality, never
//! with a tolerance.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// An exact, totally ordered field element.
pub trait Scalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Widens to an arbitrary-precision rational.
    fn to_big(&self) -> BigRational;

    /// Narrows from an arbitrary-precision rational, `None` if it does not fit.
    fn from_big(value: &BigRational) -> Option<Self>;

    /// `numer / denom`, panicking on a zero denominator.
    fn ratio(numer: i64, denom: i64) -> Self {
        Self::from_i64(numer).expect("i64 fits") / Self::from_i64(denom).expect("i64 fits")
    }

    fn from_usize_exact(value: usize) -> Self {
        Self::from_usize(value).expect("usize fits the scalar type")
    }

    fn is_integer(&self) -> bool {
        self.to_big().is_integer()
    }

    fn floor_exact(&self) -> Self {
        Self::from_big(&self.to_big().floor()).expect("floor of a representable value fits")
    }
}

impl Scalar for BigRational {
    fn to_big(&self) -> BigRational {
        self.clone()
    }

    fn from_big(value: &BigRational) -> Option<Self> {
        Some(value.clone())
    }

    fn is_integer(&self) -> bool {
        num_rational::Ratio::is_integer(self)
    }

    fn floor_exact(&self) -> Self {
        self.floor()
    }
}

impl Scalar for Rational64 {
    fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }

    fn from_big(value: &BigRational) -> Option<Self> {
        let numer = value.numer().to_i64()?;
        let denom = value.denom().to_i64()?;
        Some(Rational64::new(numer, denom))
    }

    fn is_integer(&self) -> bool {
        num_rational::Ratio::is_integer(self)
    }

    fn floor_exact(&self) -> Self {
        self.floor()
    }
}

/// Sum of a slice of scalars.
pub fn sum<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, v| acc + v.clone())
}

/// Largest non-negative integer `k` with `k * k <= value`.
pub fn isqrt_floor<T: Scalar>(value: &T) -> u64 {
    if !value.is_positive() {
        return 0;
    }
    let target = value.floor_exact();
    let mut lo = 0u64;
    let mut hi = 1u64;
    while T::from_u64(hi * hi).expect("u64 fits") <= target {
        hi *= 2;
    }
    // lo*lo <= target < hi*hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if T::from_u64(mid * mid).expect("u64 fits") <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(crate) fn is_one<T: Scalar>(value: &T) -> bool {
    *value == T::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn ratio_is_reduced() {
        let r = q(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
        assert_eq!(r.to_string(), "-3/4");
    }

    #[test]
    fn narrowing_round_trip() {
        let r = q(-3, 8);
        let small = Rational64::from_big(&r).unwrap();
        assert_eq!(small, Rational64::new(-3, 8));
        assert_eq!(small.to_big(), r);
        let huge = BigRational::from_integer(BigInt::from(u64::MAX) * 4);
        assert!(Rational64::from_big(&huge).is_none());
    }

    #[test]
    fn floor_and_integer_checks() {
        assert_eq!(q(-7, 2).floor_exact(), q(-4, 1));
        assert!(q(83, 1).is_integer());
        assert!(!Rational64::new(9, 4).is_integer());
    }

    #[test]
    fn isqrt_matches_brute_force() {
        for n in 0..200i64 {
            for d in 1..5i64 {
                let v = q(n, d);
                let k = isqrt_floor(&v);
                let brute = (0u64..).take_while(|k| q((k * k) as i64, 1) <= v).last().unwrap();
                assert_eq!(k, brute, "value {v}");
            }
        }
    }

    #[test]
    fn sum_of_empty_is_zero() {
        assert!(sum::<BigRational>(&[]).is_zero());
        assert!(is_one(&sum(&[q(1, 4), q(3, 4)])));
    }
}
