//! Scalar abstraction shared by every solver in the crate.
//!
//! All numerical code is written against [`Real`], which both `f32` and `f64`
//! satisfy. The crate root re-exports `f64` aliases for everyday use.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + rustfft::FftNum
    + Send
    + Sync
    + 'static
{
    /// Euler-Mascheroni constant.
    fn euler_gamma() -> Self {
        Self::lit(0.577_215_664_901_532_9)
    }

    /// Convert an `f64` literal. Every `Real` can represent (or round) any
    /// finite `f64`, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar for closed-form coefficient algebra. Besides the floats
/// this admits exact rationals such as `num_rational::Ratio<i64>`, so that
/// polynomial identities between coefficients can be checked without rounding.
pub trait Exact: Num + Clone + FromPrimitive + PartialOrd + Debug {
    /// `num / den`.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("representable") / Self::from_i64(den).expect("representable")
    }
}

impl<T: Num + Clone + FromPrimitive + PartialOrd + Debug> Exact for T {}

/// Complex amplitude over a [`Real`].
pub type Cplx<T> = Complex<T>;

/// Fixed-order sum; the order of `values` is the summation order.
#[inline]
pub(crate) fn ordered_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    values.into_iter().fold(T::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.25), 0.25f32);
        assert!((f64::euler_gamma() - 0.5772156649015329).abs() < 1e-16);
    }
}
