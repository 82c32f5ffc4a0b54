//! Branching particle estimator for the value function of the
//! polynomial-approximated PIDE, usable when the memory dimension makes
//! grids infeasible.
//!
//! With `f` a second-order polynomial in `(U, D_a U, D_b U)`, a particle
//! born at `(t, x)` lives an exponential time `τ`, drifts with the memory
//! decay, then picks a term of `f` uniformly and spawns one child per
//! factor of `U` in that term. The product of the weights
//! `coefficient / (P(label) ρ(τ))` over the tree is an unbiased estimate of
//! `U(t, x)`.

mod particle;
mod pde;
mod poly;

pub use particle::{
    estimate_u, labels, run_particle, sample_label, tree_rng, BranchLabel, Estimate, ParticleConfig,
    TreeStats, DEFAULT_MAX_PARTICLES,
};
pub use pde::solve_polynomial;
pub use poly::{
    taylor_coefficients, taylor_generator, Coeffs, Expansion, GeneratorPoly, GridGuide,
    GuideProjection, IncrementGuide, Terms,
};
