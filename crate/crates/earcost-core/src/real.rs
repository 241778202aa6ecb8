//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate that does floating-point math is generic over
//! [`Real`], so the same code runs in `f32` and `f64`. The fixed-point path
//! is the deliberate exception: it works on raw integers and converts at its
//! boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` literal into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable")
    }

    /// Lift a count into this scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    /// Lossy view as `f64` (exact for `f32` and `f64` values).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
