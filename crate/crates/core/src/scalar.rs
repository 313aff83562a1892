//! Numeric scalar abstraction shared by the analytic and optimization code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("constant representable in scalar type")
    }

    /// Conversion from a count.
    #[inline]
    fn count(v: u64) -> Self {
        <Self as NumCast>::from(v).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `(1 - x)^e`, evaluated as `exp(e * ln(1 - x))` so that large exponents
/// keep their precision. `e == 0` yields 1 even when `x == 1`.
#[inline]
pub fn pow_one_minus<T: Scalar>(x: T, e: T) -> T {
    if e == T::zero() {
        return T::one();
    }
    (e * (-x).ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_one_minus_matches_powf() {
        for &(x, e) in &[(0.001_f64, 999.0), (0.5, 3.0), (0.0, 10.0), (0.2, 0.5)] {
            let direct = (1.0 - x).powf(e);
            assert!((pow_one_minus(x, e) - direct).abs() <= 1e-13 * direct.max(1e-300));
        }
    }

    #[test]
    fn pow_one_minus_edge_cases() {
        assert_eq!(pow_one_minus(1.0_f64, 0.0), 1.0);
        assert_eq!(pow_one_minus(1.0_f64, 2.0), 0.0);
        assert_eq!(pow_one_minus(1.0_f32, 0.0), 1.0);
    }
}
