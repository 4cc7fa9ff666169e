use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type the closed-form parts of the crate are written against.
///
/// Implemented for `f32` and `f64`. The mesh and the stochastic simulator are
/// `f64` only: junction grading reaches element sizes far below `f32` resolution.
pub trait Scalar:
    'static + Float + FloatConst + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync
{
    /// Converts an `f64` literal. Every value used in the crate is representable.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}
