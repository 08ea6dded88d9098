//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used for constraint comparisons, floored at the
    /// scalar's own resolution.
    fn constraint_tolerance() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(8.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `a >= b` up to a relative tolerance.
pub(crate) fn ge_rel<T: Real>(a: T, b: T) -> bool {
    a >= b - T::constraint_tolerance() * b.abs().max(a.abs())
}

pub(crate) fn coth<T: Real>(x: T) -> T {
    T::one() / x.tanh()
}

/// Inverse hyperbolic cotangent for `x > 1`.
pub(crate) fn acoth<T: Real>(x: T) -> T {
    T::lit(0.5) * ((x + T::one()) / (x - T::one())).ln()
}
