//! Scalar abstraction for the core math.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit is generic over: `f32` or `f64`.
///
/// All geometry, mapping, and optimization code is written against this
/// trait; the crate root exports `f64` aliases for the shipped tools.
pub trait Real:
    nalgebra::RealField
    + Copy
    + Default
    + FromPrimitive
    + ToPrimitive
    + std::fmt::Display
    + std::str::FromStr
    + Send
    + Sync
{
    /// IEEE positive infinity.
    const INF: Self;

    /// Convert an `f64` constant into the scalar type.
    fn from_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite scalar constant")
    }

    /// Widen to `f64` (exact for `f32`/`f64`).
    fn to_c(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    const INF: Self = f32::INFINITY;
}

impl Real for f64 {
    const INF: Self = f64::INFINITY;
}
