//! Scalar abstraction: everything numeric is generic over a real type `R`
//! so the whole stack runs in f32 or f64. Concrete aliases live in the
//! crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Shorthand for lifting f64 literals into `R`. Panics only if `R` cannot
/// represent finite f64 values at all, which no supported scalar does.
#[inline]
pub fn r<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("scalar conversion")
}

pub type C<R> = num_complex::Complex<R>;
