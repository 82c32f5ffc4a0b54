use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Kernel;

/// `K(t) = Σ α_i e^{-γ_i t}`: nonnegative weights, positive rates.
///
/// The empty sum is allowed and denotes the zero kernel (Poisson flows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpSumRaw<S>", bound(deserialize = "S: Scalar"))]
pub struct ExpSumKernel<S> {
    weights: Vec<S>,
    rates: Vec<S>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpSumRaw<S> {
    weights: Vec<S>,
    rates: Vec<S>,
}

impl<S: Scalar> TryFrom<ExpSumRaw<S>> for ExpSumKernel<S> {
    type Error = Error;

    fn try_from(raw: ExpSumRaw<S>) -> Result<Self> {
        Self::new(raw.weights, raw.rates)
    }
}

impl<S: Scalar> ExpSumKernel<S> {
    pub fn new(weights: Vec<S>, rates: Vec<S>) -> Result<Self> {
        if weights.len() != rates.len() {
            return Err(Error::domain(format!(
                "weights ({}) and rates ({}) differ in length",
                weights.len(),
                rates.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= S::zero()) || !w.is_finite()) {
            return Err(Error::domain(format!("weight {w} is not a finite nonnegative number")));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > S::zero()) || !r.is_finite()) {
            return Err(Error::domain(format!("rate {r} is not a finite positive number")));
        }
        Ok(Self { weights, rates })
    }

    /// The zero kernel, with no exponential terms.
    pub fn zero() -> Self {
        Self {
            weights: Vec::new(),
            rates: Vec::new(),
        }
    }

    pub fn single(weight: S, rate: S) -> Result<Self> {
        Self::new(vec![weight], vec![rate])
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn rates(&self) -> &[S] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Closed-form `Σ α_i`.
    pub fn value_at_zero(&self) -> S {
        self.weights.iter().copied().sum()
    }

    /// Closed-form `Σ α_i / γ_i`.
    pub fn l1(&self) -> S {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &r)| w / r)
            .sum()
    }

    /// Evaluates without the domain check; `t` is assumed nonnegative.
    #[inline]
    pub fn eval_unchecked(&self, t: S) -> S {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &r)| w * (-r * t).exp())
            .sum()
    }

    /// Appends one exponential term.
    pub fn with_term(&self, weight: S, rate: S) -> Result<Self> {
        let mut weights = self.weights.clone();
        let mut rates = self.rates.clone();
        weights.push(weight);
        rates.push(rate);
        Self::new(weights, rates)
    }

    pub fn cast<T: Scalar>(&self) -> ExpSumKernel<T> {
        ExpSumKernel {
            weights: self.weights.iter().map(|w| T::lit(w.as_f64())).collect(),
            rates: self.rates.iter().map(|r| T::lit(r.as_f64())).collect(),
        }
    }
}

impl<S: Scalar> Kernel<S> for ExpSumKernel<S> {
    fn eval(&self, t: S) -> Result<S> {
        if !(t >= S::zero()) {
            return Err(Error::domain(format!("kernel evaluated at negative time {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    fn l1_norm(&self) -> Result<S> {
        Ok(self.l1())
    }

    fn at_zero(&self) -> S {
        self.value_at_zero()
    }
}
