//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over [`Scalar`], so the same code
//! runs in `f32` or `f64`. Double precision is the default throughout the
//! crate-root aliases; single precision is mostly useful for memory-bound
//! experiments.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by every operation in this crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + LinalgScalar
        + ScalarOperand
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn cast<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("finite f64 constant must be representable")
}
