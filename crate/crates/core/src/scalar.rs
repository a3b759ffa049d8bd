//! Minimal numeric abstraction so the same formula can run in `f64` and in
//! exact rational arithmetic.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Num + Neg<Output = Self> + PartialOrd + Debug {
    /// Exact conversion for rationals (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;

    fn ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite value")
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        // ToPrimitive on BigRational rounds correctly and handles big operands.
        ToPrimitive::to_f64(self).unwrap_or(if self.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        })
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        for x in [0.1, -3.75, 1e-300, 6.02e23] {
            let q = <BigRational as Scalar>::from_f64(x);
            assert_eq!(Scalar::to_f64(&q), x);
        }
        let third = <BigRational as Scalar>::ratio(1, 3);
        assert_eq!(Scalar::to_f64(&third), 1.0 / 3.0);
    }
}
