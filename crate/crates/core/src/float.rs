//! Scalar abstraction so the numerical core runs in either `f32` or `f64`.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used throughout the solvers and sequence builders.
///
/// Implemented for `f32` and `f64`. Everything downstream (prox, solver,
/// weight sequences, generators) is generic over this trait; the crate root
/// exposes `f64` aliases for the common case.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + Sum
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lift an `f64` constant into the working scalar type.
#[inline]
pub fn fp<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must be representable")
}

/// Lift a count into the working scalar type.
#[inline]
pub fn fp_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count must be representable")
}
