use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Field used for atom probabilities and conditional moments.
///
/// `f64` drives the Monte-Carlo code; `BigRational` makes the covariance
/// identities checkable with exact equality.
pub trait Scalar: Clone + Debug + PartialOrd + Num + FromPrimitive + Send + Sync + 'static {
    fn to_f64_lossy(&self) -> f64;

    /// Equality up to the representation's rounding (exact for rationals).
    fn close_to(&self, other: &Self) -> bool;

    fn is_positive_value(&self) -> bool {
        *self > Self::zero()
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Scalar for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn close_to(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-12 * self.abs().max(other.abs()).max(1.0)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }
}

/// `p / q` as an exact rational.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `a <= sqrt(b * c)` decided without square roots (`b, c >= 0`).
pub fn le_sqrt_product<T: Scalar + Signed>(a: &T, b: &T, c: &T) -> bool {
    if *a <= T::zero() {
        return true;
    }
    a.clone() * a.clone() <= b.clone() * c.clone()
}
