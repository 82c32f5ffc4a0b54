use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

use super::{MarketState, Side};

/// Nondecreasing rate map `Φ` applied to the total excitation.
///
/// Thinning freezes `Φ` at its value after the last event, which dominates
/// the future rate only if `Φ` is nondecreasing.
#[derive(Clone)]
pub struct RateMap<S>(Arc<dyn Fn(S) -> S + Send + Sync>);

impl<S> RateMap<S> {
    pub fn new(f: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl<S> fmt::Debug for RateMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RateMap(<fn>)")
    }
}

/// Baseline, kernel and spread sensitivity of the two order flows.
///
/// Without a custom map the base intensity is affine, `μ + Σ c_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"), deny_unknown_fields)]
pub struct IntensitySpec<S> {
    pub mu: S,
    pub kernel: ExpSumKernel<S>,
    pub k_over_sigma: S,
    #[serde(skip)]
    pub rate_map: Option<RateMap<S>>,
}

impl<S: Scalar> IntensitySpec<S> {
    pub fn new(mu: S, kernel: ExpSumKernel<S>, k_over_sigma: S) -> Result<Self> {
        let spec = Self {
            mu,
            kernel,
            k_over_sigma,
            rate_map: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= S::zero()) || !self.mu.is_finite() {
            return Err(Error::domain(format!("baseline intensity must be nonnegative, got {}", self.mu)));
        }
        if !(self.k_over_sigma > S::zero()) || !self.k_over_sigma.is_finite() {
            return Err(Error::domain(format!("k/sigma must be positive, got {}", self.k_over_sigma)));
        }
        Ok(())
    }

    pub fn with_rate_map(mut self, map: RateMap<S>) -> Self {
        self.rate_map = Some(map);
        self
    }

    /// `σ/k`, the spread scale.
    pub fn spread_scale(&self) -> S {
        S::one() / self.k_over_sigma
    }

    pub fn phi(&self, excitation: S) -> S {
        match &self.rate_map {
            None => self.mu + excitation,
            Some(m) => (m.0)(excitation),
        }
    }

    /// Uncontrolled intensity `Φ(Σ_i c_i)` of one side.
    pub fn base_intensity(&self, state: &MarketState<S>, side: Side) -> S {
        self.phi(state.excitation(side))
    }

    /// `e^{-(k/σ) δ} Φ(Σ_i c_i)`; spreads must be nonnegative.
    pub fn controlled_intensity(&self, state: &MarketState<S>, side: Side, spread: S) -> Result<S> {
        if !(spread >= S::zero()) {
            return Err(Error::domain(format!("spread must be nonnegative, got {spread}")));
        }
        Ok(self.fill_probability(spread) * self.base_intensity(state, side))
    }

    #[inline]
    pub fn fill_probability(&self, spread: S) -> S {
        (-self.k_over_sigma * spread).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, n: usize) -> IntensitySpec<f64> {
        let k = ExpSumKernel::new(vec![0.45; n], vec![1.0; n]).unwrap();
        IntensitySpec::new(mu, k, 20.0).unwrap()
    }

    #[test]
    fn base_intensity_is_affine() {
        let s = spec(0.1, 2);
        let st = MarketState::flat(2, 0);
        assert!((s.base_intensity(&st, Side::Ask) - 0.1).abs() < 1e-15);
        let st = MarketState::new(0, vec![0.45, 0.45], vec![0.0, 0.0], 0.0).unwrap();
        assert!((s.base_intensity(&st, Side::Ask) - 1.0).abs() < 1e-15);
        let s0 = spec(0.0, 1);
        let st = MarketState::new(0, vec![0.0], vec![0.37], 0.0).unwrap();
        assert_eq!(s0.base_intensity(&st, Side::Bid), 0.37);
    }

    #[test]
    fn controlled_intensity_closed_forms() {
        let s = spec(0.1, 2);
        let st = MarketState::new(0, vec![0.45, 0.45], vec![0.0, 0.0], 0.0).unwrap();
        let base = s.base_intensity(&st, Side::Ask);
        assert_eq!(s.controlled_intensity(&st, Side::Ask, 0.0).unwrap(), base);
        let v = s.controlled_intensity(&st, Side::Ask, 0.05).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
        assert_eq!(s.controlled_intensity(&st, Side::Ask, 1e6).unwrap(), 0.0);
        assert!(matches!(
            s.controlled_intensity(&st, Side::Ask, -0.01),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn custom_rate_map_is_used() {
        let s = spec(0.1, 1).with_rate_map(RateMap::new(|x: f64| 0.5 + 2.0 * x));
        let st = MarketState::new(0, vec![0.25], vec![0.0], 0.0).unwrap();
        assert_eq!(s.base_intensity(&st, Side::Ask), 1.0);
    }
}
