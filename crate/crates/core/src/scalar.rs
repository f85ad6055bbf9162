//! Scalar abstraction shared by the channel, estimator and oracle layers.
//!
//! Everything that carries a probability, an attenuation factor or a matrix
//! element is generic over [`Real`]; the crate root exposes `f64` aliases for
//! the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite literal")
    }

    /// Conversion from a count.
    fn from_count(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("representable count")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite value")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Clamps `value` into `[lo, hi]`.
pub(crate) fn clamp<T: Real>(value: T, lo: T, hi: T) -> T {
    value.max(lo).min(hi)
}
