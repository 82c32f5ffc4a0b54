use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::quadrature;
use super::Kernel;

/// Upper end of the quadrature part of the L1 norm; the remainder is summed
/// analytically.
const QUADRATURE_CUTOFF: f64 = 100.0;

/// Shifted power-law kernel `K(t) = λ / (λ + (t+ε)^α) · (t+ε)^{-β}`.
///
/// It is completely monotone, and integrable on `[0, ∞)` iff `α + β > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerLawRaw<S>", bound(deserialize = "S: Scalar"))]
pub struct PowerLawKernel<S> {
    pub lam: S,
    pub alpha: S,
    pub beta: S,
    pub eps: S,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerLawRaw<S> {
    lam: S,
    alpha: S,
    beta: S,
    eps: S,
}

impl<S: Scalar> TryFrom<PowerLawRaw<S>> for PowerLawKernel<S> {
    type Error = Error;

    fn try_from(raw: PowerLawRaw<S>) -> Result<Self> {
        Self::new(raw.lam, raw.alpha, raw.beta, raw.eps)
    }
}

impl<S: Scalar> PowerLawKernel<S> {
    pub fn new(lam: S, alpha: S, beta: S, eps: S) -> Result<Self> {
        let open_unit = |x: S| x > S::zero() && x < S::one();
        if !(lam > S::zero()) || !lam.is_finite() {
            return Err(Error::domain(format!("lam must be positive, got {lam}")));
        }
        if !open_unit(alpha) {
            return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !open_unit(beta) {
            return Err(Error::domain(format!("beta must lie in (0,1), got {beta}")));
        }
        if !(eps > S::zero()) || !eps.is_finite() {
            return Err(Error::domain(format!("eps must be positive, got {eps}")));
        }
        Ok(Self {
            lam,
            alpha,
            beta,
            eps,
        })
    }

    /// The parameters used in the long-memory experiment.
    pub fn reference() -> Self {
        Self {
            lam: S::lit(0.1),
            alpha: S::lit(0.7),
            beta: S::lit(0.4),
            eps: S::lit(0.01),
        }
    }

    #[inline]
    fn shape(&self, s: S) -> S {
        self.lam / (self.lam + s.powf(self.alpha)) * s.powf(-self.beta)
    }

    /// Laplace transform of the (unshifted) representing density,
    /// `s ↦ λ / ((λ + s^α) s^β)`, for real `s > 0`.
    pub fn transform(&self, s: S) -> S {
        self.shape(s)
    }

    /// Same transform on the complex plane (principal branch).
    pub fn transform_complex(&self, s: Complex<S>) -> Complex<S> {
        let sa = s.powf(self.alpha);
        let sb = s.powf(self.beta);
        Complex::new(self.lam, S::zero()) / ((sa + self.lam) * sb)
    }

    pub fn is_integrable(&self) -> bool {
        self.alpha + self.beta > S::one()
    }

    /// `∫_{cut}^{∞} K(t) dt` from the convergent expansion
    /// `λ s^{-(α+β)} Σ_k (-λ s^{-α})^k`, valid when `λ (cut+ε)^{-α} < 1`.
    fn tail(&self, cut: S) -> Result<S> {
        let s = cut + self.eps;
        let ratio = self.lam * s.powf(-self.alpha);
        if ratio >= S::lit(0.5) {
            return Err(Error::numerical(format!(
                "tail expansion does not converge fast enough at s = {s}"
            )));
        }
        let ab = self.alpha + self.beta;
        let mut sum = S::zero();
        let mut sign_pow = S::one();
        for k in 0..200 {
            let kk = S::from_usize_lossy(k);
            let expo = ab + kk * self.alpha - S::one();
            let term = sign_pow * s.powf(-expo) / expo;
            sum = sum + term;
            if term.abs() <= S::epsilon() * sum.abs() {
                return Ok(self.lam * sum);
            }
            sign_pow = -sign_pow * self.lam;
        }
        Err(Error::numerical("tail expansion did not converge"))
    }
}

impl<S: Scalar> Kernel<S> for PowerLawKernel<S> {
    fn eval(&self, t: S) -> Result<S> {
        if !(t >= S::zero()) {
            return Err(Error::domain(format!("kernel evaluated at negative time {t}")));
        }
        Ok(self.shape(t + self.eps))
    }

    /// Adaptive Simpson on geometric panels of `[0, 100]` plus the analytic
    /// tail.
    fn l1_norm(&self) -> Result<S> {
        if !self.is_integrable() {
            return Err(Error::domain(format!(
                "power-law kernel with alpha + beta = {} <= 1 is not integrable",
                self.alpha + self.beta
            )));
        }
        let cut = S::lit(QUADRATURE_CUTOFF);
        let mut breaks = vec![S::zero()];
        let mut b = self.eps;
        while b < cut {
            breaks.push(b);
            b = b * S::lit(4.0);
        }
        breaks.push(cut);
        let body = quadrature::panels(&|t: S| self.shape(t + self.eps), &breaks, S::lit(1e-13))?;
        Ok(body + self.tail(cut)?)
    }

    fn at_zero(&self) -> S {
        self.shape(self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero_matches_closed_form() {
        let k = PowerLawKernel::<f64>::reference();
        let v = k.eval(0.0).unwrap();
        // 0.1 / (0.1 + 0.01^0.7) * 0.01^-0.4 evaluated in 50-digit arithmetic
        assert!((v - 4.512939764341551).abs() < 1e-12, "{v}");
        assert!((v - 4.5127).abs() < 5e-4);
    }

    #[test]
    fn strictly_positive_and_decreasing() {
        let k = PowerLawKernel::<f64>::reference();
        let mut prev = f64::INFINITY;
        for i in 0..2000 {
            let t = i as f64 * 0.05;
            let v = k.eval(t).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(PowerLawKernel::new(0.1, 0.7, 1.2, 0.01).is_err());
        assert!(PowerLawKernel::new(0.1, 0.0, 0.4, 0.01).is_err());
        assert!(PowerLawKernel::new(-0.1, 0.7, 0.4, 0.01).is_err());
        assert!(PowerLawKernel::new(0.1, 0.7, 0.4, 0.0).is_err());
    }

    #[test]
    fn non_integrable_combination_is_rejected() {
        let k = PowerLawKernel::new(0.1, 0.3, 0.4, 0.01).unwrap();
        assert!(matches!(k.l1_norm(), Err(Error::Domain(_))));
    }

    #[test]
    fn negative_time_is_a_domain_error() {
        assert!(PowerLawKernel::<f64>::reference().eval(-0.5).is_err());
    }

    #[test]
    fn complex_transform_agrees_on_real_axis() {
        let k = PowerLawKernel::<f64>::reference();
        for &s in &[0.05, 1.0, 7.5] {
            let z = k.transform_complex(Complex::new(s, 0.0));
            assert!((z.re - k.transform(s)).abs() < 1e-14);
            assert!(z.im.abs() < 1e-14);
        }
    }
}
