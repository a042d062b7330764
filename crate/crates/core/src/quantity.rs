//! Scalar types that can carry epochs, marks and matrix entries.
//!
//! The geometric model and the tandem run on exact integers, the exponential
//! model on `f64`. Everything in `queue_store` and `tandem` is generic over
//! [`Quantity`] so that the integer paths never touch floating point.

use std::fmt::{Debug, Display};
use std::ops::{Add, Sub};
use std::str::FromStr;

pub trait Quantity:
    Copy + PartialOrd + Debug + Display + FromStr + Add<Output = Self> + Sub<Output = Self> + Send + Sync + 'static
{
    const ZERO: Self;
    const EXACT: bool;

    fn to_f64(self) -> f64;

    /// Rejects NaN and infinities; always true for integers.
    fn is_finite(self) -> bool {
        true
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `(self - other)^+`, safe for unsigned types.
    fn sub_pos(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Self::ZERO
        }
    }

    /// Equality for identity checks: exact for integers, `1e-12` relative for reals.
    fn approx_eq(self, other: Self, scale: Self) -> bool {
        if Self::EXACT {
            self == other
        } else {
            let tol = 1e-12 * scale.to_f64().abs().max(1.0);
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }
}

impl Quantity for i64 {
    const ZERO: Self = 0;
    const EXACT: bool = true;
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Quantity for u64 {
    const ZERO: Self = 0;
    const EXACT: bool = true;
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Quantity for f64 {
    const ZERO: Self = 0.0;
    const EXACT: bool = false;
    fn to_f64(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

pub(crate) fn sum<T: Quantity>(xs: &[T]) -> T {
    xs.iter().fold(T::ZERO, |acc, &x| acc + x)
}
