use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::grid::{Geometry, GridSpec};
use super::hamiltonian::{hamiltonian_at, hamiltonian_max};

/// Everything a generator may need to know about the cell being updated.
#[derive(Debug, Clone, Copy)]
pub struct Cell<'a, S> {
    pub t: S,
    pub step: usize,
    pub inventory: i64,
    pub row: usize,
    pub ask_node: usize,
    pub bid_node: usize,
    pub c_ask: &'a [S],
    pub c_bid: &'a [S],
    pub phi_ask: S,
    pub phi_bid: S,
    /// Value at the cell on the later slice.
    pub u: S,
}

/// The jump part of the equation: given `D_a U` and `D_b U` at a cell,
/// returns the ask and bid contributions to `∂_t U`.
pub trait Generator<S: Scalar>: Sync {
    fn jump_terms(&self, cell: &Cell<'_, S>, incr_ask: S, incr_bid: S) -> (S, S);

    /// Bound on `∂(jump term)/∂(increment)` in units of phi, used in the
    /// stability check. 1 for the Hamiltonian and for any fixed control.
    fn slope_factor(&self) -> S {
        S::one()
    }
}

/// The maximized Hamiltonian: the HJB equation proper.
#[derive(Debug, Clone, Copy)]
pub struct OptimalControl<S> {
    pub k_over_sigma: S,
}

impl<S: Scalar> Generator<S> for OptimalControl<S> {
    fn jump_terms(&self, cell: &Cell<'_, S>, incr_ask: S, incr_bid: S) -> (S, S) {
        (
            hamiltonian_max(incr_ask, cell.phi_ask, self.k_over_sigma).1,
            hamiltonian_max(incr_bid, cell.phi_bid, self.k_over_sigma).1,
        )
    }
}

/// A feedback strategy `(t, i, c^a, c^b) ↦ (δ^a, δ^b)`.
pub trait Policy<S: Scalar>: Sync {
    fn spreads(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S]) -> (S, S);
}

/// Same spreads everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy<S> {
    pub ask: S,
    pub bid: S,
}

impl<S: Scalar> Policy<S> for ConstantPolicy<S> {
    fn spreads(&self, _t: S, _inventory: i64, _c_ask: &[S], _c_bid: &[S]) -> (S, S) {
        (self.ask, self.bid)
    }
}

/// The linear equation with the control frozen to a policy.
pub struct FixedControl<'p, S, P: ?Sized> {
    pub policy: &'p P,
    pub k_over_sigma: S,
}

impl<S: Scalar, P: Policy<S> + ?Sized> Generator<S> for FixedControl<'_, S, P> {
    fn jump_terms(&self, cell: &Cell<'_, S>, incr_ask: S, incr_bid: S) -> (S, S) {
        let (da, db) = self.policy.spreads(cell.t, cell.inventory, cell.c_ask, cell.c_bid);
        (
            hamiltonian_at(incr_ask, cell.phi_ask, self.k_over_sigma, da),
            hamiltonian_at(incr_bid, cell.phi_bid, self.k_over_sigma, db),
        )
    }
}

/// One stored time slice of the value function.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice<S> {
    pub step: usize,
    pub values: Vec<S>,
}

/// Value function on the grid at the stored time slices (ascending steps;
/// step `k` is time `k·dt`).
#[derive(Debug, Clone)]
pub struct ValueGrid<S: Scalar> {
    pub spec: GridSpec<S>,
    pub geometry: Geometry<S>,
    pub steps: usize,
    pub dt: S,
    pub slices: Vec<Slice<S>>,
}

impl<S: Scalar> ValueGrid<S> {
    pub fn time(&self, step: usize) -> S {
        S::from_usize_lossy(step) * self.dt
    }

    pub fn slice(&self, step: usize) -> Option<&Slice<S>> {
        self.slices.iter().find(|s| s.step == step)
    }

    pub fn initial(&self) -> &Slice<S> {
        &self.slices[0]
    }

    pub fn terminal(&self) -> &Slice<S> {
        self.slices.last().expect("a value grid always stores its terminal slice")
    }

    /// Value at an arbitrary state on a stored slice, multilinear in `c`.
    pub fn value(&self, step: usize, inventory: i64, c_ask: &[S], c_bid: &[S]) -> Result<S> {
        let slice = self
            .slice(step)
            .ok_or_else(|| Error::precondition(format!("time step {step} was not stored")))?;
        self.check_state(inventory, c_ask, c_bid)?;
        Ok(self.geometry.interpolate(&self.spec, &slice.values, inventory, c_ask, c_bid))
    }

    pub fn value_at_start(&self, inventory: i64, c_ask: &[S], c_bid: &[S]) -> Result<S> {
        self.value(0, inventory, c_ask, c_bid)
    }

    fn check_state(&self, inventory: i64, c_ask: &[S], c_bid: &[S]) -> Result<()> {
        if c_ask.len() != self.geometry.n || c_bid.len() != self.geometry.n {
            return Err(Error::domain(format!(
                "state has {}/{} memory coordinates, grid has {}",
                c_ask.len(),
                c_bid.len(),
                self.geometry.n
            )));
        }
        if inventory < self.spec.i_min || inventory > self.spec.i_max {
            return Err(Error::domain(format!(
                "inventory {inventory} outside [{}, {}]",
                self.spec.i_min, self.spec.i_max
            )));
        }
        Ok(())
    }

    /// `max |U| / (1 + i² + |c|²)` over the stored slices: a polynomial
    /// growth sanity constant.
    pub fn growth_constant(&self) -> S {
        let geo = &self.geometry;
        let mut worst = S::zero();
        for s in &self.slices {
            for ii in 0..geo.n_inv {
                let i = S::from_i64_lossy(geo.inventory(ii));
                for a in 0..geo.p {
                    let ca: S = geo.node_coords(a).iter().map(|&x| x * x).sum();
                    for b in 0..geo.p {
                        let cb: S = geo.node_coords(b).iter().map(|&x| x * x).sum();
                        let v = s.values[geo.index(ii, a, b)].abs() / (S::one() + i * i + ca + cb);
                        worst = worst.max(v);
                    }
                }
            }
        }
        worst
    }
}

/// Optimal spreads at stored time slices. Spreads at step `k` come from
/// the value at step `k + 1`, matching the explicit scheme.
#[derive(Debug, Clone)]
pub struct FeedbackTable<S: Scalar> {
    pub spec: GridSpec<S>,
    pub geometry: Geometry<S>,
    pub steps: usize,
    pub dt: S,
    pub stride: usize,
    pub slices: Vec<FeedbackSlice<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSlice<S> {
    pub step: usize,
    pub ask: Vec<S>,
    pub bid: Vec<S>,
}

impl<S: Scalar> FeedbackTable<S> {
    /// Index of the slice governing time `t`: the last stored step at or
    /// before the step containing `t`.
    pub fn slot(&self, t: S) -> usize {
        let k = (t / self.dt + S::lit(1e-9)).floor().to_usize().unwrap_or(0).min(self.steps - 1);
        (k / self.stride).min(self.slices.len() - 1)
    }
}

impl<S: Scalar> Policy<S> for FeedbackTable<S> {
    fn spreads(&self, t: S, inventory: i64, c_ask: &[S], c_bid: &[S]) -> (S, S) {
        let s = &self.slices[self.slot(t)];
        let g = &self.geometry;
        let st = g.stencil(&self.spec, inventory, c_ask, c_bid);
        (g.apply(&st, &s.ask), g.apply(&st, &s.bid))
    }
}

/// `(D_a U, D_b U)` at a cell. Beyond the inventory bounds the value is
/// frozen at the boundary row.
#[inline]
fn increments<S: Scalar>(next: &[S], geo: &Geometry<S>, ii: usize, a: usize, b: usize) -> (S, S) {
    let u = next[geo.index(ii, a, b)];
    let row_ask = ii.saturating_sub(1);
    let row_bid = (ii + 1).min(geo.n_inv - 1);
    let mut ua = S::zero();
    for &(node, w) in geo.jump_stencil(a) {
        ua = ua + w * next[geo.index(row_ask, node, b)];
    }
    let mut ub = S::zero();
    for &(node, w) in geo.jump_stencil(b) {
        ub = ub + w * next[geo.index(row_bid, a, node)];
    }
    (ua - u, ub - u)
}

/// One explicit Euler step backward in time: the slice at step `step`
/// from the slice at `step + 1`.
pub fn step_backward<S, G>(next: &[S], spec: &GridSpec<S>, geo: &Geometry<S>, generator: &G, step: usize) -> Result<Vec<S>>
where
    S: Scalar,
    G: Generator<S> + ?Sized,
{
    let dt = spec.effective_dt();
    let t = S::from_usize_lossy(step) * dt;
    let p = geo.p;
    let mut out = vec![S::zero(); next.len()];
    out.par_chunks_mut(p * p).enumerate().for_each(|(ii, row)| {
        let inventory = geo.inventory(ii);
        let i = S::from_i64_lossy(inventory);
        let running = -spec.mu_penalty * i * i;
        for a in 0..p {
            for b in 0..p {
                let idx = geo.index(ii, a, b);
                let u = next[idx];
                let mut drift = S::zero();
                for &(lower, coef) in geo.drift_stencil(a) {
                    drift = drift + coef * (next[geo.index(ii, lower, b)] - u);
                }
                for &(lower, coef) in geo.drift_stencil(b) {
                    drift = drift + coef * (next[geo.index(ii, a, lower)] - u);
                }
                let (ia, ib) = increments(next, geo, ii, a, b);
                let cell = Cell {
                    t,
                    step,
                    inventory,
                    row: ii,
                    ask_node: a,
                    bid_node: b,
                    c_ask: geo.node_coords(a),
                    c_bid: geo.node_coords(b),
                    phi_ask: spec.mu_base + geo.excitation[a],
                    phi_bid: spec.mu_base + geo.excitation[b],
                    u,
                };
                let (ja, jb) = generator.jump_terms(&cell, ia, ib);
                row[a * p + b] = u + dt * (drift + running + ja + jb - spec.discount * u);
            }
        }
    });
    if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Instability(format!(
            "non-finite value at cell {bad}, step {step}: dt (r + Σ γ c_max/Δc + 2 sup phi) ≤ 1 must hold (currently {})",
            dt * spec.stability_rate()
        )));
    }
    Ok(out)
}

/// Backward sweep of the equation with an arbitrary jump generator.
///
/// `on_step(k, next)` is called before each step with the slice at `k + 1`.
pub fn sweep<S, G, F>(spec: &GridSpec<S>, generator: &G, mut on_step: F) -> Result<ValueGrid<S>>
where
    S: Scalar,
    G: Generator<S> + ?Sized,
    F: FnMut(usize, &[S]),
{
    spec.validate()?;
    let slope = generator.slope_factor();
    if slope > S::one() {
        let jumps = S::two() * spec.max_rate();
        let lhs = spec.effective_dt() * (spec.stability_rate() - jumps + slope * jumps);
        if lhs > S::one() {
            return Err(Error::Instability(format!(
                "generator slope factor {slope} requires a smaller dt (bound evaluates to {lhs})"
            )));
        }
    }
    let geo = Geometry::new(spec);
    let steps = spec.steps();
    let stride = spec.snapshot_stride;
    let mut current = vec![S::zero(); geo.cells()];
    let mut slices = vec![Slice {
        step: steps,
        values: current.clone(),
    }];
    for k in (0..steps).rev() {
        on_step(k, &current);
        current = step_backward(&current, spec, &geo, generator, k)?;
        if k % stride == 0 {
            slices.push(Slice {
                step: k,
                values: current.clone(),
            });
        }
    }
    slices.reverse();
    Ok(ValueGrid {
        spec: spec.clone(),
        geometry: geo,
        steps,
        dt: spec.effective_dt(),
        slices,
    })
}

/// Solves the HJB equation and extracts the optimal feedback.
pub fn solve<S: Scalar>(spec: &GridSpec<S>) -> Result<(ValueGrid<S>, FeedbackTable<S>)> {
    let generator = OptimalControl {
        k_over_sigma: spec.k_over_sigma,
    };
    let geo = Geometry::new(spec);
    let stride = spec.snapshot_stride;
    let mut feedback = Vec::new();
    let values = sweep(spec, &generator, |k, next| {
        if k % stride == 0 {
            feedback.push(feedback_slice(spec, &geo, next, k));
        }
    })?;
    feedback.reverse();
    let table = FeedbackTable {
        spec: spec.clone(),
        geometry: geo,
        steps: values.steps,
        dt: values.dt,
        stride,
        slices: feedback,
    };
    Ok((values, table))
}

fn feedback_slice<S: Scalar>(spec: &GridSpec<S>, geo: &Geometry<S>, next: &[S], step: usize) -> FeedbackSlice<S> {
    let p = geo.p;
    let scale = spec.k_over_sigma.recip();
    let mut ask = vec![S::zero(); next.len()];
    let mut bid = vec![S::zero(); next.len()];
    ask.par_chunks_mut(p * p)
        .zip(bid.par_chunks_mut(p * p))
        .enumerate()
        .for_each(|(ii, (ra, rb))| {
            for a in 0..p {
                for b in 0..p {
                    let (ia, ib) = increments(next, geo, ii, a, b);
                    ra[a * p + b] = (scale - ia).max(S::zero());
                    rb[a * p + b] = (scale - ib).max(S::zero());
                }
            }
        });
    FeedbackSlice { step, ask, bid }
}

/// Jump increments `(D_a U, D_b U)` of a stored slice at every cell.
pub fn slice_increments<S: Scalar>(grid: &ValueGrid<S>, slice: &Slice<S>) -> (Vec<S>, Vec<S>) {
    let geo = &grid.geometry;
    let mut da = Vec::with_capacity(slice.values.len());
    let mut db = Vec::with_capacity(slice.values.len());
    for ii in 0..geo.n_inv {
        for a in 0..geo.p {
            for b in 0..geo.p {
                let (x, y) = increments(&slice.values, geo, ii, a, b);
                da.push(x);
                db.push(y);
            }
        }
    }
    (da, db)
}

/// Value of applying `policy` in the model described by `spec`: the linear
/// equation with the supremum replaced by the policy's spreads.
pub fn evaluate_fixed_control<S, P>(policy: &P, spec: &GridSpec<S>) -> Result<ValueGrid<S>>
where
    S: Scalar,
    P: Policy<S> + ?Sized,
{
    let generator = FixedControl {
        policy,
        k_over_sigma: spec.k_over_sigma,
    };
    sweep(spec, &generator, |_, _| {})
}
