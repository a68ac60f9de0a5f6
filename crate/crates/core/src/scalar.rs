//! The floating point scalar the numerical core is generic over.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type usable by every module of the core: `f32` or `f64`.
///
/// All tolerances quoted in the test-suite are for `f64`; `f32` works
/// end to end but only reaches single-precision agreement.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Default
    + Debug
    + Display
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `2^k` for an integer exponent.
    #[inline]
    fn exp2i(k: i32) -> Self {
        Self::lit(2.0).powi(k)
    }
}

impl Real for f32 {}
impl Real for f64 {}
