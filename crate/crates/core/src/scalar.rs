//! Numeric types that metric ratios can be computed in.
//!
//! Metrics are ratios of transition counts, so any field that can represent
//! `num / den` works: `f64` for reporting, `f32` for compact storage and
//! [`Rational64`] when results must compare exactly.

use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive};

pub trait Scalar: Num + Copy + PartialOrd + Debug {
    /// The ratio `num / den`. Callers guarantee `den > 0`.
    fn from_counts(num: usize, den: usize) -> Self;

    fn to_f64(self) -> f64;

    /// `1` when `flag` holds, else `0`.
    fn indicator(flag: bool) -> Self {
        if flag {
            Self::one()
        } else {
            Self::zero()
        }
    }

    /// Harmonic mean of two ratios; `0` when both are `0`.
    fn harmonic_mean(a: Self, b: Self) -> Self {
        let sum = a + b;
        if sum.is_zero() {
            Self::zero()
        } else {
            let two = Self::one() + Self::one();
            two * a * b / sum
        }
    }
}

impl Scalar for f64 {
    fn from_counts(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_counts(num: usize, den: usize) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Rational64 {
    fn from_counts(num: usize, den: usize) -> Self {
        Rational64::new(num as i64, den as i64)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_mean_matches_closed_form() {
        let f = f64::harmonic_mean(0.8, 1.0);
        assert!((f - 16.0 / 18.0).abs() < 1e-15);
        let r = Rational64::harmonic_mean(Rational64::new(4, 5), Rational64::new(1, 1));
        assert_eq!(r, Rational64::new(8, 9));
        assert_eq!(f32::harmonic_mean(0.0, 0.0), 0.0);
    }
}
