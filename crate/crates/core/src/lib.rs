//! Optimal market making when buy and sell market orders follow Hawkes
//! processes with completely monotone kernels.
//!
//! The pipeline approximates the kernel by a sum of exponentials
//! ([`kernels`]), solves the resulting finite-dimensional HJB equation on a
//! grid ([`hjb`]) or estimates it pointwise with a branching particle method
//! ([`branching`]), and evaluates strategies in closed loop against a
//! simulated market ([`hawkes`], [`marketsim`]).
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the CLI uses.

// Parameter checks are written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod error;
pub mod hawkes;
pub mod hjb;
pub mod kernels;
pub mod marketsim;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ExpSumKernelF64 = kernels::ExpSumKernel<f64>;
pub type PowerLawKernelF64 = kernels::PowerLawKernel<f64>;
pub type KernelSpecF64 = kernels::KernelSpec<f64>;
pub type MarketStateF64 = hawkes::MarketState<f64>;
pub type IntensitySpecF64 = hawkes::IntensitySpec<f64>;
pub type GridSpecF64 = hjb::GridSpec<f64>;
pub type ValueGridF64 = hjb::ValueGrid<f64>;
pub type FeedbackTableF64 = hjb::FeedbackTable<f64>;
pub type GeneratorPolyF64 = branching::GeneratorPoly<f64>;
