//! Lattice solver for a d-dimensional stochastic Burgers-type equation
//!
//! The equation lives on the unit cube `[0,1]^d` with Dirichlet boundary
//! conditions and is driven by Gaussian noise that is white in time and
//! correlated in space through a kernel `f(x, y)`. Space is discretized on
//! the interior lattice with spacing `1/n`, which turns the equation into a
//! coupled system of SDEs
//!
//! ```text
//! du_i = [ (A u)_i + 1/2 (B u^2)_i ] dt + n^d sigma(u_i) dF_i
//! ```
//!
//! where `A` is the discrete Laplacian, `B` the summed forward-difference
//! gradient acting on the squared field, and `dF_i` the noise increment
//! aggregated over the grid cell attached to node `i`.
//!
//! The crate provides:
//!
//! * [`grid`] — the interior lattice, multi-index/linear-index bijection and
//!   cell geometry;
//! * [`operators`] — stencil and sparse-matrix forms of the discrete
//!   operators, and the drift of the system;
//! * [`noise`] — cell covariance of the colored noise and increment sampling;
//! * [`coefficients`] — the non-Lipschitz diffusion coefficients and their
//!   Hölder diagnostics;
//! * [`integrator`] — Euler–Maruyama time stepping with range clamping, plus
//!   a high-order deterministic reference solver;
//! * [`heatkernel`] — the discrete heat kernel of the random walk generated
//!   by the Laplacian and its decay/regularity reports;
//! * [`diagnostics`] — martingale-problem statistics and grid-refinement
//!   convergence diagnostics over replica ensembles.
//!
//! Replica ensembles are embarrassingly parallel; with the default
//! `parallel` feature they fan out over a rayon thread pool, and without it
//! everything runs on a single thread. Results are byte-identical either
//! way: every replica owns an independent, deterministically derived
//! generator and reductions run in replica order with compensated summation.

// negated comparisons like `!(dt > 0.0)` reject NaN; the positive rewrite
// clippy suggests would let NaN through the validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod coefficients;
pub mod diagnostics;
mod error;
mod exec;
pub mod grid;
pub mod heatkernel;
pub mod integrator;
pub mod noise;
pub mod operators;
pub mod stats;

pub use error::{Error, Result};
