//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating-point scalar: `f32` or `f64`.
///
/// All solvers are written against this trait. Physical constants and
/// configuration values are stored as `f64` and brought in with [`Real::lit`].
pub trait Real: RealField + Copy + ToPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self;

    /// Lossy conversion back to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Unit roundoff of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }

    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }

    fn eps() -> Self {
        f64::EPSILON
    }
}
