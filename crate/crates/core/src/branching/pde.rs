use crate::error::{Error, Result};
use crate::hjb::{sweep, Cell, Generator, GridSpec, ValueGrid};
use crate::scalar::Scalar;

use super::poly::GeneratorPoly;

struct PolyGenerator<'a, S> {
    poly: &'a GeneratorPoly<S>,
    slope: S,
}

impl<S: Scalar> Generator<S> for PolyGenerator<'_, S> {
    fn jump_terms(&self, cell: &Cell<'_, S>, incr_ask: S, incr_bid: S) -> (S, S) {
        let c = self.poly.coefficients(cell.t, cell.inventory, cell.c_ask, cell.c_bid);
        let ask = c.f0 + c.f1 * cell.u + c.f21[0] * incr_ask + c.f22[0] * incr_ask * incr_ask;
        let bid = c.f21[1] * incr_bid + c.f22[1] * incr_bid * incr_bid;
        (ask, bid)
    }

    fn slope_factor(&self) -> S {
        self.slope
    }
}

/// Finite-difference solution of the polynomial PIDE on `grid`: the same
/// scheme as the HJB solver with the Hamiltonian replaced by the
/// polynomial. Penalty and discount come from the polynomial, so those
/// fields of `grid` are ignored.
///
/// `slope_factor` bounds `|∂f/∂(D_j U)| / phi` over the solution; the step
/// is checked against it.
pub fn solve_polynomial<S: Scalar>(poly: &GeneratorPoly<S>, grid: &GridSpec<S>, slope_factor: S) -> Result<ValueGrid<S>> {
    if poly.kernel != grid.kernel {
        return Err(Error::config("polynomial and grid use different kernels"));
    }
    let mut spec = grid.clone();
    spec.mu_penalty = S::zero();
    spec.discount = S::zero();
    let generator = PolyGenerator {
        poly,
        slope: slope_factor,
    };
    sweep(&spec, &generator, |_, _| {})
}
