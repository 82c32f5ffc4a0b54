use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hawkes::{IntensitySpec, Side};
use crate::hjb::{BeliefMap, ValueGrid};
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

/// Coefficients of `f(U, D_a U, D_b U) = f0 + f1 U + Σ_j (f21_j D_j U + f22_j (D_j U)²)`
/// at one point; arrays are indexed by [`Side::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coeffs<S> {
    pub f0: S,
    pub f1: S,
    pub f21: [S; 2],
    pub f22: [S; 2],
}

impl<S: Scalar> Coeffs<S> {
    pub fn eval(&self, u: S, da: S, db: S) -> S {
        let jumps = [da, db].into_iter().zip(self.f21).zip(self.f22);
        jumps.fold(self.f0 + self.f1 * u, |v, ((d, a), b)| v + a * d + b * d * d)
    }
}

/// Which terms of the polynomial can be nonzero. Fixed for a generator, so
/// the label set does not depend on the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Terms {
    pub constant: bool,
    pub linear: bool,
    pub first: [bool; 2],
    pub second: [bool; 2],
}

impl Terms {
    pub const ALL: Terms = Terms {
        constant: true,
        linear: true,
        first: [true, true],
        second: [true, true],
    };
}

type CoeffFn<S> = dyn Fn(S, i64, &[S], &[S]) -> Coeffs<S> + Send + Sync;

/// Second-order polynomial nonlinearity of the PIDE
/// `∂_t U + L U + f(U, D_a U, D_b U) = 0`, `U(T) = 0`, where `L` is the
/// decay of the memory coordinates of `kernel` and `D_j` the jump
/// differences of the same kernel.
#[derive(Clone)]
pub struct GeneratorPoly<S> {
    pub kernel: ExpSumKernel<S>,
    pub terms: Terms,
    coeffs: Arc<CoeffFn<S>>,
}

impl<S> fmt::Debug for GeneratorPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorPoly").field("terms", &self.terms).finish_non_exhaustive()
    }
}

impl<S: Scalar> GeneratorPoly<S> {
    pub fn new(
        kernel: ExpSumKernel<S>,
        terms: Terms,
        coeffs: impl Fn(S, i64, &[S], &[S]) -> Coeffs<S> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kernel,
            terms,
            coeffs: Arc::new(coeffs),
        }
    }

    pub fn zero() -> Self {
        Self::new(ExpSumKernel::zero(), Terms::default(), |_, _, _, _| Coeffs::default())
    }

    /// `f ≡ κ`: solution `κ (T − t)`.
    pub fn constant(kappa: S) -> Self {
        let terms = Terms {
            constant: true,
            ..Terms::default()
        };
        Self::new(ExpSumKernel::zero(), terms, move |_, _, _, _| Coeffs {
            f0: kappa,
            ..Coeffs::default()
        })
    }

    /// `f = κ + λ U`: solution `(κ/λ)(e^{λ(T−t)} − 1)`.
    pub fn affine(kappa: S, lambda: S) -> Self {
        let terms = Terms {
            constant: true,
            linear: true,
            ..Terms::default()
        };
        Self::new(ExpSumKernel::zero(), terms, move |_, _, _, _| Coeffs {
            f0: kappa,
            f1: lambda,
            ..Coeffs::default()
        })
    }

    pub fn coefficients(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S]) -> Coeffs<S> {
        (self.coeffs)(t, inventory, c_ask, c_bid)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn eval(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S], u: S, da: S, db: S) -> S {
        self.coefficients(t, inventory, c_ask, c_bid).eval(u, da, db)
    }
}

/// Supplies a state-dependent expansion point for the Taylor generator,
/// typically the jump increment of a cheaper pre-solve.
pub trait IncrementGuide<S>: Send + Sync {
    fn increment(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S], side: Side) -> S;
}

/// Where to expand the Hamiltonian.
#[derive(Clone)]
pub enum Expansion<S> {
    /// Same point everywhere, per side (ask, bid).
    Fixed([S; 2]),
    /// Point supplied by a guide. Where the guide's increment lies at or
    /// beyond `σ/k`, the Hamiltonian is `phi·I` exactly and that linear
    /// form is used instead of a Taylor polynomial.
    Guided(Arc<dyn IncrementGuide<S>>),
}

impl<S> fmt::Debug for Expansion<S>
where
    S: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(p) => f.debug_tuple("Fixed").field(p).finish(),
            Self::Guided(_) => f.write_str("Guided(..)"),
        }
    }
}

/// `(A0, A1, A2)` with `A0 + A1 I + A2 I²` the second-order Taylor
/// polynomial in `I` of the maximized Hamiltonian `phi (σ/k) e^{(k/σ) I − 1}`
/// around `i0`, or the exact linear form `phi I` when `i0 ≥ σ/k`.
pub fn taylor_coefficients<S: Scalar>(phi: S, k_over_sigma: S, i0: S) -> [S; 3] {
    let scale = k_over_sigma.recip();
    if i0 >= scale {
        return [S::zero(), phi, S::zero()];
    }
    let e = (k_over_sigma * i0 - S::one()).exp();
    let h0 = phi * e * scale;
    let h1 = phi * e;
    let h2 = phi * k_over_sigma * e;
    [h0 - h1 * i0 + S::half() * h2 * i0 * i0, h1 - h2 * i0, S::half() * h2]
}

/// Polynomial approximation of the inventory-penalty HJB nonlinearity
/// `−μ i² − r U + Σ_j H_j(D_j U)`.
pub fn taylor_generator<S: Scalar>(
    spec: &IntensitySpec<S>,
    penalty: S,
    discount: S,
    expansion: Expansion<S>,
) -> Result<GeneratorPoly<S>> {
    spec.validate()?;
    if spec.rate_map.is_some() {
        return Err(Error::precondition("the Taylor generator assumes the affine rate map"));
    }
    if let Expansion::Fixed(points) = &expansion {
        for (side, &p) in Side::BOTH.iter().zip(points) {
            if p >= spec.spread_scale() {
                return Err(Error::precondition(format!(
                    "{side} expansion point {p} is at or beyond σ/k = {}, where the Hamiltonian has a kink; \
                     split the domain or use a guided expansion",
                    spec.spread_scale()
                )));
            }
        }
    }
    let hawkes_free = spec.mu == S::zero() && spec.kernel.is_empty();
    let terms = Terms {
        constant: penalty > S::zero() || !hawkes_free,
        linear: discount > S::zero(),
        first: [!hawkes_free; 2],
        second: [!hawkes_free; 2],
    };
    let mu = spec.mu;
    let kos = spec.k_over_sigma;
    let coeffs = move |t: S, inventory: i64, c_ask: &[S], c_bid: &[S]| {
        let i = S::from_i64_lossy(inventory);
        let mut out = Coeffs {
            f0: -penalty * i * i,
            f1: -discount,
            ..Coeffs::default()
        };
        for side in Side::BOTH {
            let c = if side == Side::Ask { c_ask } else { c_bid };
            let phi = mu + c.iter().copied().sum::<S>();
            let i0 = match &expansion {
                Expansion::Fixed(p) => p[side.index()],
                Expansion::Guided(g) => g.increment(t, inventory, c_ask, c_bid, side),
            };
            let [a0, a1, a2] = taylor_coefficients(phi, kos, i0);
            out.f0 = out.f0 + a0;
            out.f21[side.index()] = a1;
            out.f22[side.index()] = a2;
        }
        out
    };
    Ok(GeneratorPoly::new(spec.kernel.clone(), terms, coeffs))
}

/// How a guide grid sees a true state.
#[derive(Debug, Clone)]
pub enum GuideProjection<S> {
    /// Belief map onto the guide kernel's coordinates.
    Belief(BeliefMap<S>),
    /// A one-term guide driven by the total excitation `Σ_i c_i`.
    TotalExcitation,
}

/// Increments `D_j U` read from a finite-difference value grid, possibly of
/// a reduced model.
#[derive(Debug, Clone)]
pub struct GridGuide<S: Scalar> {
    pub grid: ValueGrid<S>,
    pub kernel: ExpSumKernel<S>,
    pub projection: GuideProjection<S>,
}

impl<S: Scalar> GridGuide<S> {
    pub fn new(grid: ValueGrid<S>, kernel: ExpSumKernel<S>, projection: GuideProjection<S>) -> Result<Self> {
        if let GuideProjection::TotalExcitation = projection {
            if grid.geometry.n != 1 {
                return Err(Error::config("a total-excitation guide needs a one-term guide grid"));
            }
        }
        Ok(Self {
            grid,
            kernel,
            projection,
        })
    }

    fn project(&self, c: &[S], out: &mut Vec<S>) {
        out.clear();
        match &self.projection {
            GuideProjection::Belief(m) => out.extend(m.project(c)),
            GuideProjection::TotalExcitation => out.push(c.iter().copied().sum()),
        }
    }

    fn slice_values(&self, t: S) -> &[S] {
        // the stored slice closest to t
        let k = (t / self.grid.dt).round().to_usize().unwrap_or(0);
        let best = self
            .grid
            .slices
            .iter()
            .min_by_key(|s| s.step.abs_diff(k))
            .expect("value grids store at least one slice");
        &best.values
    }
}

impl<S: Scalar> IncrementGuide<S> for GridGuide<S> {
    fn increment(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S], side: Side) -> S {
        let values = self.slice_values(t);
        let (mut pa, mut pb) = (Vec::new(), Vec::new());
        self.project(c_ask, &mut pa);
        self.project(c_bid, &mut pb);
        let here = self.grid.geometry.interpolate(&self.grid.spec, values, inventory, &pa, &pb);
        let bumped: Vec<S> = match side {
            Side::Ask => c_ask,
            Side::Bid => c_bid,
        }
        .iter()
        .zip(self.kernel.weights())
        .map(|(&c, &w)| c + w)
        .collect();
        let next_inv = (inventory + side.inventory_step()).clamp(self.grid.spec.i_min, self.grid.spec.i_max);
        match side {
            Side::Ask => self.project(&bumped, &mut pa),
            Side::Bid => self.project(&bumped, &mut pb),
        }
        let there = self.grid.geometry.interpolate(&self.grid.spec, values, next_inv, &pa, &pb);
        there - here
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_at_zero_matches_derivatives() {
        // H(0) = 0.05/e, H'(0) = 1/e, H''(0) = 20/e
        let [a0, a1, a2] = taylor_coefficients(1.0f64, 20.0, 0.0);
        let e = (-1.0f64).exp();
        assert!((a0 - 0.018_393_972_058_572_1).abs() < 1e-15);
        assert!((a1 - e).abs() < 1e-15);
        assert!((a2 - 10.0 * e).abs() < 1e-14);
        assert!((a2 - 3.678_794_411_714_423).abs() < 1e-12);
    }

    #[test]
    fn taylor_is_exact_to_second_order() {
        let (phi, k, i0) = (2.3, 20.0, -0.04);
        let [a0, a1, a2] = taylor_coefficients(phi, k, i0);
        let h = |i: f64| phi / k * (k * i - 1.0f64).exp();
        for d in [1e-3, -1e-3, 5e-4] {
            let p = a0 + a1 * (i0 + d) + a2 * (i0 + d) * (i0 + d);
            // remainder is H'''/6 d³
            assert!((p - h(i0 + d)).abs() < phi * k * k * (k * i0 - 1.0f64).exp() * d.abs().powi(3));
        }
    }

    #[test]
    fn linear_regime_is_exact() {
        assert_eq!(taylor_coefficients(1.5f64, 20.0, 0.2), [0.0, 1.5, 0.0]);
    }

    #[test]
    fn coefficients_evaluate_to_f0_at_zero() {
        let spec = IntensitySpec::new(0.1, ExpSumKernel::single(0.9, 1.0).unwrap(), 20.0).unwrap();
        let g = taylor_generator(&spec, 0.1, 0.0, Expansion::Fixed([0.0, 0.0])).unwrap();
        let c = g.coefficients(0.0, -3, &[1.0], &[0.5]);
        assert_eq!(c.eval(0.0, 0.0, 0.0), c.f0);
        assert!(c.f22.iter().all(|&x| x > 0.0));
        let h0 = |phi: f64| phi * 0.05 * (-1.0f64).exp();
        assert!((c.f0 - (-0.9 + h0(1.1) + h0(0.6))).abs() < 1e-14);
    }

    #[test]
    fn kink_expansion_is_rejected() {
        let spec = IntensitySpec::new(0.1, ExpSumKernel::single(0.9, 1.0).unwrap(), 20.0).unwrap();
        assert!(taylor_generator(&spec, 0.1, 0.0, Expansion::Fixed([0.05, 0.0])).is_err());
    }

    #[test]
    fn degenerate_model_gives_zero_generator() {
        let spec = IntensitySpec::new(0.0, ExpSumKernel::zero(), 20.0).unwrap();
        let g = taylor_generator(&spec, 0.0, 0.0, Expansion::Fixed([0.0, 0.0])).unwrap();
        assert_eq!(g.terms, Terms::default());
        assert_eq!(g.coefficients(0.3, 4, &[], &[]), Coeffs::default());
    }
}
