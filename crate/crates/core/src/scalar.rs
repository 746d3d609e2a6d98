//! Scalar abstraction shared by the function and series layers.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point type usable by [`PeriodicFn`](crate::PeriodicFn) and the
/// symbolic series: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for literals and configuration values.
    fn of(v: f64) -> Self;

    /// Widening conversion to `f64`; used by binning and reporting.
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac<T: Scalar>(x: T) -> T {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1
    if f >= T::one() {
        T::zero()
    } else {
        f
    }
}
