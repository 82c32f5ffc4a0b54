use crate::scalar::Scalar;

/// Maximizer and maximum of `δ ↦ phi e^{-κδ}(δ + I)` over `δ ≥ 0`, with
/// `κ = k/σ`.
///
/// The unconstrained stationary point is `δ = 1/κ − I`; when it is negative
/// the function is decreasing on the half line and the maximum sits at 0.
pub fn hamiltonian_max<S: Scalar>(incr: S, phi: S, k_over_sigma: S) -> (S, S) {
    let spread = (k_over_sigma.recip() - incr).max(S::zero());
    let value = phi * (-k_over_sigma * spread).exp() * (spread + incr);
    (spread, value)
}

/// Value of quoting `spread` instead of the maximizer.
pub fn hamiltonian_at<S: Scalar>(incr: S, phi: S, k_over_sigma: S, spread: S) -> S {
    phi * (-k_over_sigma * spread).exp() * (spread + incr)
}

/// Derivative of the maximized Hamiltonian in `incr`: `phi e^{-κ δ*}`.
pub fn hamiltonian_slope<S: Scalar>(incr: S, phi: S, k_over_sigma: S) -> S {
    let spread = (k_over_sigma.recip() - incr).max(S::zero());
    phi * (-k_over_sigma * spread).exp()
}
