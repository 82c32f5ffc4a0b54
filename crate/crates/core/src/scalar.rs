//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the kernels, solvers and simulators are generic over.
///
/// Implemented for `f32` and `f64`. Monte Carlo and Laplace inversion are
/// tuned for `f64`; `f32` is supported but loses several digits in the
/// Gaver–Stehfest cancellation.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Formats a value with 17 significant digits, the representation used in
/// every CSV artifact.
pub fn fmt17<S: Scalar>(x: S) -> String {
    format!("{:.16e}", x.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_is_round_trip_exact() {
        for &x in &[0.1f64, 1.0 / 3.0, -4.512939764341551, 1e-300, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn lit_converts_for_f32() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::half(), 0.5);
    }
}
