//! Exponential-sum approximation of completely monotone kernels.
//!
//! A completely monotone kernel is the Laplace transform of a positive
//! measure, `K(t) = ∫ e^{-ut} m(du)`. Discretizing that integral on the grid
//! `a_i = i/√n` gives an `n`-term exponential sum that undershoots `K`; one
//! extra exponential then restores `K(0)` and `‖K‖₁` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{fmt17, Scalar};

use super::laplace::{fixed_talbot, gaver_stehfest, InversionMethod};
use super::quadrature::adaptive_simpson;
use super::{ExpSumKernel, Kernel, PowerLawKernel};

/// Points of the uniform grid on `[0, T]` used for sup-norm error reports.
pub const SUP_GRID_POINTS: usize = 1000;
const CELL_TOLERANCE: f64 = 1e-10;

/// How the measure mass of a grid cell `[a_i, a_{i+1}]` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRule {
    /// `m(a_{i+1}) (a_{i+1} - a_i)`.
    RightEndpoint,
    /// Adaptive Simpson over the cell.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct ApproxReport<S> {
    pub kernel: ExpSumKernel<S>,
    pub sup_err: S,
    pub l1_err: S,
    pub n: usize,
    /// Number of density values that came out negative and were set to zero.
    pub clamped: usize,
}

impl<S: Scalar> ApproxReport<S> {
    pub const CSV_HEADER: &'static str = "n,sup_err,l1_err";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.n, fmt17(self.sup_err), fmt17(self.l1_err))
    }
}

/// Grid nodes `a_i = i/√n`, `i = 0..=n`.
fn riemann_grid<S: Scalar>(n: usize) -> Vec<S> {
    let root = S::from_usize_lossy(n).sqrt();
    (0..=n).map(|i| S::from_usize_lossy(i) / root).collect()
}

enum Negatives {
    Reject,
    Clamp,
}

fn riemann_terms<S, F>(
    density: F,
    n: usize,
    rule: CellRule,
    negatives: Negatives,
) -> Result<(ExpSumKernel<S>, usize)>
where
    S: Scalar,
    F: Fn(S) -> Result<S>,
{
    if n < 2 {
        return Err(Error::domain(format!("need at least two grid cells, got {n}")));
    }
    let grid = riemann_grid::<S>(n);
    let mut clamped = 0;
    let mut weights = Vec::with_capacity(n);
    let mut first_err = None;
    for cell in grid.windows(2) {
        let (lo, hi) = (cell[0], cell[1]);
        let mass = match rule {
            CellRule::RightEndpoint => density(hi)? * (hi - lo),
            CellRule::Quadrature => {
                let f = |u: S| match density(u) {
                    Ok(v) => v,
                    Err(_) => S::nan(),
                };
                adaptive_simpson(&f, lo, hi, S::lit(CELL_TOLERANCE))?
            }
        };
        if !mass.is_finite() {
            first_err.get_or_insert_with(|| {
                Error::numerical(format!("non-finite measure mass on [{lo}, {hi}]"))
            });
            continue;
        }
        if mass < S::zero() {
            match negatives {
                Negatives::Reject => {
                    return Err(Error::domain(format!(
                        "negative measure density on [{lo}, {hi}]: not completely monotone"
                    )))
                }
                Negatives::Clamp => {
                    clamped += 1;
                    weights.push(S::zero());
                    continue;
                }
            }
        }
        weights.push(mass);
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let rates = grid[1..].to_vec();
    Ok((ExpSumKernel::new(weights, rates)?, clamped))
}

/// Riemann-sum approximation of `∫ e^{-ut} m(du)` on `[0, √n]` with mesh
/// `1/√n`; term `i` has rate `a_{i+1}` and weight equal to the cell mass.
pub fn riemann_approx<S, F>(measure_density: F, n: usize, rule: CellRule) -> Result<ExpSumKernel<S>>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    riemann_terms(|u| Ok(measure_density(u)), n, rule, Negatives::Reject).map(|(k, _)| k)
}

/// Adds `α e^{-βt}` so that the result has `K(0) = k0` and `‖K‖₁ = l1`.
///
/// `α = k0 - K_n(0)` and `β = α / (l1 - ‖K_n‖₁)`. Returns the input when
/// it already matches.
pub fn rescale_match<S: Scalar>(kernel: &ExpSumKernel<S>, k0: S, l1: S) -> Result<ExpSumKernel<S>> {
    let head_gap = k0 - kernel.value_at_zero();
    let mass_gap = l1 - kernel.l1();
    let tiny = S::lit(64.0) * S::epsilon();
    let head_zero = head_gap.abs() <= tiny * k0.abs().max(S::one());
    let mass_zero = mass_gap.abs() <= tiny * l1.abs().max(S::one());
    if head_zero && mass_zero {
        return Ok(kernel.clone());
    }
    if head_gap < S::zero() || head_zero {
        return Err(Error::precondition(format!(
            "approximation overshoots or exhausts K(0): target {k0}, current {} (refine the mesh)",
            kernel.value_at_zero()
        )));
    }
    if !(mass_gap > S::zero()) || mass_zero {
        return Err(Error::precondition(format!(
            "approximation overshoots the L1 norm: target {l1}, current {} (refine the mesh)",
            kernel.l1()
        )));
    }
    kernel.with_term(head_gap, head_gap / mass_gap)
}

/// Outcome of [`approximate_power_law`].
#[derive(Debug, Clone)]
pub struct PowerLawApprox<S> {
    /// Matched `(n+1)`-term kernel.
    pub kernel: ExpSumKernel<S>,
    /// The `n`-term Riemann sum before matching.
    pub unmatched: ExpSumKernel<S>,
    pub clamped: usize,
}

/// Density of the measure representing the shifted power law, including the
/// `e^{-pε}` factor, computed by Laplace inversion.
pub fn power_law_density<S: Scalar>(target: &PowerLawKernel<S>, p: S, method: InversionMethod) -> Result<S> {
    let raw = match method {
        InversionMethod::GaverStehfest { order } => gaver_stehfest(|s| target.transform(s), p, order)?,
        InversionMethod::FixedTalbot { nodes } => {
            fixed_talbot(|s| target.transform_complex(s), p, nodes)?
        }
    };
    Ok((-p * target.eps).exp() * raw)
}

/// Builds the `n`-term Riemann sum of the power-law kernel from its inverted
/// Laplace density and matches `K(0)` and the L1 norm.
pub fn approximate_power_law<S: Scalar>(
    target: &PowerLawKernel<S>,
    n: usize,
    method: InversionMethod,
) -> Result<PowerLawApprox<S>> {
    let (unmatched, clamped) = riemann_terms(
        |p| power_law_density(target, p, method),
        n,
        CellRule::RightEndpoint,
        Negatives::Clamp,
    )?;
    let kernel = rescale_match(&unmatched, target.at_zero(), target.l1_norm()?)?;
    Ok(PowerLawApprox {
        kernel,
        unmatched,
        clamped,
    })
}

/// Maximum of `|K(t) - K̃(t)|` over [`SUP_GRID_POINTS`] uniform points of `[0, horizon]`.
pub fn sup_error<S, K>(target: &K, approx: &ExpSumKernel<S>, horizon: S) -> Result<S>
where
    S: Scalar,
    K: Kernel<S> + ?Sized,
{
    if !(horizon > S::zero()) {
        return Err(Error::domain(format!("sup-error horizon must be positive, got {horizon}")));
    }
    let last = S::from_usize_lossy(SUP_GRID_POINTS - 1);
    let mut worst = S::zero();
    for j in 0..SUP_GRID_POINTS {
        let t = horizon * S::from_usize_lossy(j) / last;
        let e = (target.eval(t)? - approx.eval_unchecked(t)).abs();
        worst = worst.max(e);
    }
    Ok(worst)
}

pub fn report<S, K>(target: &K, approx: ExpSumKernel<S>, horizon: S, clamped: usize) -> Result<ApproxReport<S>>
where
    S: Scalar,
    K: Kernel<S> + ?Sized,
{
    let sup_err = sup_error(target, &approx, horizon)?;
    let l1_err = (target.l1_norm()? - approx.l1()).abs();
    Ok(ApproxReport {
        n: approx.len(),
        kernel: approx,
        sup_err,
        l1_err,
        clamped,
    })
}
