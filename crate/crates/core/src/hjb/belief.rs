use crate::error::{Error, Result};
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

use super::grid::STACK_DIM;
use super::solver::Policy;

/// Linear map from the memory of a true exp-sum model to the memory a
/// trader running a different (believed) kernel would hold.
///
/// Fed by the same events, a believed coordinate with rate `γ` equals
/// `α^bel / Σ α_i` times the sum of the true coordinates sharing that rate,
/// provided the two started consistent. Believed rates absent from the true
/// kernel would need an extra state variable and are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap<S> {
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> BeliefMap<S> {
    pub fn new(truth: &ExpSumKernel<S>, belief: &ExpSumKernel<S>) -> Result<Self> {
        if belief.len() > STACK_DIM {
            return Err(Error::config(format!("believed kernel has more than {STACK_DIM} terms")));
        }
        let tol = S::lit(1e-12);
        let mut rows = Vec::with_capacity(belief.len());
        for (&wb, &gb) in belief.weights().iter().zip(belief.rates()) {
            let group: Vec<usize> = (0..truth.len())
                .filter(|&i| (truth.rates()[i] - gb).abs() <= tol * gb)
                .collect();
            let mass: S = group.iter().map(|&i| truth.weights()[i]).sum();
            if !(mass > S::zero()) {
                return Err(Error::config(format!(
                    "believed rate {gb} does not occur in the true kernel; the belief is not a function of the true state"
                )));
            }
            rows.push(group.into_iter().map(|i| (i, wb / mass)).collect());
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn project_into(&self, c: &[S], out: &mut [S]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(i, w)| w * c[i]).sum();
        }
    }

    pub fn project(&self, c: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        self.project_into(c, &mut out);
        out
    }
}

/// A policy computed for a believed model, applied to true states through
/// a [`BeliefMap`].
pub struct ProjectedPolicy<'a, S, P: ?Sized> {
    pub inner: &'a P,
    pub map: BeliefMap<S>,
}

impl<S: Scalar, P: Policy<S> + ?Sized> Policy<S> for ProjectedPolicy<'_, S, P> {
    fn spreads(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S]) -> (S, S) {
        let n = self.map.dim();
        let mut ba = [S::zero(); STACK_DIM];
        let mut bb = [S::zero(); STACK_DIM];
        self.map.project_into(c_ask, &mut ba[..n]);
        self.map.project_into(c_bid, &mut bb[..n]);
        self.inner.spreads(t, inventory, &ba[..n], &bb[..n])
    }
}
