//! Hawkes kernels: exponential sums, the shifted power law, and the
//! machinery that approximates the latter by the former.

mod approx;
mod expsum;
pub mod laplace;
mod lift;
mod powerlaw;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;

pub use approx::{
    approximate_power_law, power_law_density, report, rescale_match, riemann_approx, sup_error,
    ApproxReport, CellRule, PowerLawApprox, SUP_GRID_POINTS,
};
pub use expsum::ExpSumKernel;
pub use laplace::{fixed_talbot, gaver_stehfest, laplace_invert, InversionMethod};
pub use lift::theta_to_c;
pub use powerlaw::PowerLawKernel;

pub trait Kernel<S: Scalar> {
    /// `K(t)` for `t ≥ 0`; negative times are a domain error.
    fn eval(&self, t: S) -> Result<S>;
    fn l1_norm(&self) -> Result<S>;
    fn at_zero(&self) -> S;
}

/// Serialized kernel, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", bound(deserialize = "S: Scalar"))]
pub enum KernelSpec<S> {
    #[serde(rename = "expsum")]
    ExpSum(ExpSumKernel<S>),
    #[serde(rename = "powerlaw")]
    PowerLaw(PowerLawKernel<S>),
}

impl<S: Scalar> Kernel<S> for KernelSpec<S> {
    fn eval(&self, t: S) -> Result<S> {
        match self {
            KernelSpec::ExpSum(k) => k.eval(t),
            KernelSpec::PowerLaw(k) => k.eval(t),
        }
    }

    fn l1_norm(&self) -> Result<S> {
        match self {
            KernelSpec::ExpSum(k) => k.l1_norm(),
            KernelSpec::PowerLaw(k) => k.l1_norm(),
        }
    }

    fn at_zero(&self) -> S {
        match self {
            KernelSpec::ExpSum(k) => k.at_zero(),
            KernelSpec::PowerLaw(k) => k.at_zero(),
        }
    }
}
