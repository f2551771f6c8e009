use serde::{Serialize, Serializer};

use crate::scalar::Real;

/// Nonnegative extended real used for growth rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    Zero,
    Finite(T),
    Infinite,
}

impl<T: Real> ExtendedReal<T> {
    /// Normalizes `0` to [`ExtendedReal::Zero`] and non-finite values to
    /// [`ExtendedReal::Infinite`].
    pub fn from_value(x: T) -> Self {
        if x == T::zero() {
            ExtendedReal::Zero
        } else if !x.is_finite() {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn value(self) -> T {
        match self {
            ExtendedReal::Zero => T::zero(),
            ExtendedReal::Finite(x) => x,
            ExtendedReal::Infinite => T::infinity(),
        }
    }

    /// Finite and strictly positive.
    pub fn positive_finite(self) -> Option<T> {
        match self {
            ExtendedReal::Finite(x) if x > T::zero() => Some(x),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }
}

impl<T: Real> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Zero => s.serialize_f64(0.0),
            ExtendedReal::Finite(x) => s.serialize_f64(x.as_f64()),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}
