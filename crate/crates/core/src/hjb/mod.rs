//! Finite-difference solution of the HJB equation of the lifted problem
//! and evaluation of fixed feedback strategies.
//!
//! The scheme is explicit Euler backward in time, upwind in the memory
//! coordinates (they only decay), with multilinear interpolation for the
//! jump targets `c + α`.

mod belief;
mod grid;
mod hamiltonian;
mod io;
mod solver;

pub use belief::{BeliefMap, ProjectedPolicy};
pub use grid::{Geometry, GridSpec, StackStencil, Stencil, STACK_DIM};
pub use hamiltonian::{hamiltonian_at, hamiltonian_max, hamiltonian_slope};
pub use io::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use solver::{
    evaluate_fixed_control, slice_increments, solve, step_backward, sweep, Cell, ConstantPolicy,
    FeedbackSlice, FeedbackTable, FixedControl, Generator, OptimalControl, Policy, Slice, ValueGrid,
};
