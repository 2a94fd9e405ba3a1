//! Floating-point abstraction for the solver core.
//!
//! Every numerical module is generic over [`Scalar`] so the same code runs in
//! `f32` or `f64`; the crate root pins `f64` aliases for the CLI and presets.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the solver (`f32`, `f64`).
pub trait Scalar:
    Float + NumAssign + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literals inside generic code.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal must convert into the scalar type")
    }

    /// Lossy conversion to `f64`, for reporting and formatting.
    fn to_double(self) -> f64 {
        self.to_f64().expect("scalar must convert into f64")
    }
}

impl<T> Scalar for T where
    T: Float + NumAssign + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}
