//! Scalar abstractions.
//!
//! Everything numerical in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The power-series recurrence only needs
//! field arithmetic, so it is written against the looser [`Coefficient`]
//! bound and also runs over exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + NumCast
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold
    /// any finite value, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like coefficient type used by the series recurrence.
///
/// Blanket-implemented, so `f64`, `f32` and `num_rational::BigRational`
/// all qualify.
pub trait Coefficient: Num + Clone + FromPrimitive + Debug {}

impl<T: Num + Clone + FromPrimitive + Debug> Coefficient for T {}
