//! Floating-point scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Euclid, Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + Euclid
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// a finite `f64`, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable integer")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance floor for iterative/quadrature checks: the requested
    /// tolerance, but never below a few hundred ulps of the type.
    #[inline]
    fn tolerance(requested: f64) -> Self {
        Self::lit(requested).max(Self::epsilon() * Self::lit(256.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`].
pub type Cplx<T> = Complex<T>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor_depends_on_precision() {
        assert_eq!(f64::tolerance(1e-10), 1e-10);
        assert!(f32::tolerance(1e-10) > 1e-6);
    }

    #[test]
    fn literal_conversion() {
        assert_eq!(f32::lit(0.5), 0.5f32);
    }
}
