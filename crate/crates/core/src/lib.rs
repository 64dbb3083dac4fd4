//! Primal-dual fixed-point solvers for `min f₁(x) + f₂(Bx) + f₃(x)`.
//!
//! `f₁` is smooth with a `1/β`-Lipschitz gradient, `f₂` and `f₃` have cheap
//! proximity maps and `B` is linear. Four iterations are provided: PDFP,
//! PDFP²O (`f₃ = 0`), PDFP²O with a constraint set, and Condat's scheme
//! expressed in the same variables.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod operator;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solver;
pub mod vector;

pub use error::{Error, Result};
pub use operator::{LinearMap, OpNormEstimate};
pub use prox::{LeastSquares, ProxFn, Proximable, SmoothFn};
pub use solver::{
    solve, solve_with_observer, validate_config, Algorithm, PrimalDualState, Problem, SolveOutcome,
    SolverConfig, ValidatedConfig,
};
