use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::ExpSumKernel;

/// Per-exponential memory coordinates `c_i(t) = Σ_j α_i e^{-γ_i (t - T_j)}`
/// of the Markovian lift, from the event times `T_j ≤ t`.
pub fn theta_to_c<S: Scalar>(jump_times: &[S], kernel: &ExpSumKernel<S>, t: S) -> Result<Vec<S>> {
    if let Some(&late) = jump_times.iter().find(|&&tj| tj > t) {
        return Err(Error::precondition(format!("event at {late} is after t = {t}")));
    }
    Ok(kernel
        .weights()
        .iter()
        .zip(kernel.rates())
        .map(|(&w, &r)| jump_times.iter().map(|&tj| w * (-r * (t - tj)).exp()).sum())
        .collect())
}
