use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Euler–Maruyama path of `dP = d(t, P) dt + σ dW` on `[0, horizon]`.
///
/// The price does not enter the inventory-penalty problem; this is provided
/// for completeness of the simulated market.
pub fn simulate_price<S, D>(p0: S, drift: D, sigma: S, dt: S, horizon: S, seed: u64) -> Result<Vec<(S, S)>>
where
    S: Scalar,
    D: Fn(S, S) -> S,
{
    if !(dt > S::zero()) || !(horizon > S::zero()) {
        return Err(Error::domain("price step and horizon must be positive"));
    }
    let steps = (horizon / dt).ceil().to_usize().unwrap_or(0).max(1);
    let h = horizon / S::from_usize_lossy(steps);
    let sqrt_h = h.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(steps + 1);
    let mut p = p0;
    path.push((S::zero(), p));
    for k in 0..steps {
        let t = h * S::from_usize_lossy(k);
        let z = standard_normal(&mut rng);
        p = p + drift(t, p) * h + sigma * sqrt_h * S::lit(z);
        path.push((t + h, p));
    }
    Ok(path)
}

/// Box–Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
