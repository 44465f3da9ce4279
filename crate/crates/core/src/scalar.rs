//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All math is written against [`Real`], so the same code runs in `f64`
//! (the default, used by the CLI) and `f32` (half the memory for large
//! simulations). Literal constants are spelled as `f64` and converted with
//! [`lit`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the audit toolkit.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn of(x: f64) -> Self;

    /// Widening conversion used for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline(always)]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Shorthand for [`Real::of`].
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::of(x)
}

/// Converts a count to the scalar type.
#[inline(always)]
pub fn count<T: Real>(n: usize) -> T {
    T::of(n as f64)
}
