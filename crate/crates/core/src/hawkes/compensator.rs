use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{EventLog, IntensitySpec, MarketState, Side};

/// Compensator increments `∫ λ ds` between consecutive events of one side,
/// starting from `initial` at its clock.
///
/// For an uncontrolled affine flow these are i.i.d. Exp(1) by the
/// time-change theorem, which makes them a goodness-of-fit statistic for the
/// simulator. Only spreads of exactly zero are accepted because the log
/// records the spread at fills, not along the whole path.
pub fn compensator_increments<S: Scalar>(
    spec: &IntensitySpec<S>,
    initial: &MarketState<S>,
    log: &EventLog<S>,
    side: Side,
) -> Result<Vec<S>> {
    if spec.rate_map.is_some() {
        return Err(Error::precondition("compensator increments need the affine rate map"));
    }
    if log.events.iter().any(|e| e.spread != S::zero()) {
        return Err(Error::precondition("compensator increments need an uncontrolled path"));
    }
    let rates = spec.kernel.rates();
    let weights = spec.kernel.weights();
    let mut c = initial.memory(side).to_vec();
    let mut last = initial.clock;
    let mut out = Vec::new();
    for e in log.events.iter().filter(|e| e.side == side) {
        let dt = e.time - last;
        if dt < S::zero() {
            return Err(Error::domain("event log is not time ordered"));
        }
        let mut lam = spec.mu * dt;
        for ((ci, &g), &w) in c.iter_mut().zip(rates).zip(weights) {
            let decay = (-g * dt).exp();
            lam = lam + *ci * (S::one() - decay) / g;
            *ci = *ci * decay + w;
        }
        out.push(lam);
        last = e.time;
    }
    Ok(out)
}
