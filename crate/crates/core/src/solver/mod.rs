//! Primal-dual fixed-point iterations and their step-size gate.

mod config;
mod problem;
mod steps;

use std::time::Instant;

pub use config::{
    admissible_ranges, validate_config, AdmissibleRanges, Algorithm, CondatParams, SolverConfig,
    UpperBound, ValidatedConfig,
};
pub use problem::Problem;
pub use steps::{condat_step, pdfp2o_step, pdfp2oc_step, pdfp_step, step};

use crate::diagnostics::IterationRecord;
use crate::error::{check_len, Error, Result};
use crate::operator::LinearMap;
use crate::problems::{feasibility_violation, kkt_residual, objective};
use crate::vector::{dist_sq, norm_sq};

/// The iterate `u = (v, x)`; PDFP²O_C additionally carries `v₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualState {
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub v2: Option<Vec<f64>>,
}

impl PrimalDualState {
    /// `u⁰ = (0, 0)` shaped for `problem` and `algorithm`.
    pub fn zeros(problem: &Problem, algorithm: Algorithm) -> Self {
        Self {
            v: vec![0.0; problem.dual_dim()],
            x: vec![0.0; problem.primal_dim()],
            v2: (algorithm == Algorithm::Pdfp2oc).then(|| vec![0.0; problem.primal_dim()]),
        }
    }

    /// `‖self − other‖_λ`, with `v₂` (when present on both) counted as part
    /// of the dual block.
    pub fn lambda_dist(&self, other: &Self, lambda: f64) -> f64 {
        let mut dual = dist_sq(&self.v, &other.v);
        if let (Some(a), Some(b)) = (&self.v2, &other.v2) {
            dual += dist_sq(a, b);
        }
        (lambda * dual + dist_sq(&self.x, &other.x)).sqrt()
    }

    /// The dual in its unscaled form `(λ/γ) v`, an element of `∂f₂(Bx)` at
    /// a fixed point.
    pub fn natural_dual(&self, gamma: f64, lambda: f64) -> Vec<f64> {
        let s = lambda / gamma;
        self.v.iter().map(|v| s * v).collect()
    }
}

/// `‖(dv, dx)‖_λ = √(λ‖dv‖² + ‖dx‖²)`.
pub fn lambda_norm(dv: &[f64], dx: &[f64], lambda: f64) -> f64 {
    (lambda * norm_sq(dv) + norm_sq(dx)).sqrt()
}

/// `‖v‖_M` with `M = I − λBBᵀ`.
///
/// Fails when `⟨v, Mv⟩ < −1e-12`, which signals `λ ≥ 1/λmax(BBᵀ)`.
pub fn m_norm(v: &[f64], b: &LinearMap, lambda: f64) -> Result<f64> {
    check_len("m_norm", b.out_dim(), v.len())?;
    let btv = b.adjoint(v)?;
    let inner = norm_sq(v) - lambda * norm_sq(&btv);
    if inner < -1e-12 {
        return Err(Error::InvalidParameter(format!(
            "M = I - lambda B B^T is not positive definite for lambda = {lambda} (<v, Mv> = {inner})"
        )));
    }
    Ok(inner.max(0.0).sqrt())
}

/// Outcome of [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub state: PrimalDualState,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    /// Whether the fixed-point residual reached `fp_tol`.
    pub converged: bool,
    pub final_residual: f64,
}

/// Picard iteration `u^{k+1} = T(u^k)` until `‖u^{k+1} − u^k‖_λ ≤ fp_tol`
/// or `max_iter` steps. Starts from `u⁰ = (0, 0)` unless `init` is given.
pub fn solve(
    problem: &Problem,
    cfg: &ValidatedConfig,
    init: Option<PrimalDualState>,
) -> Result<SolveOutcome> {
    solve_with_observer(problem, cfg, init, |_, _| {})
}

/// As [`solve`], calling `observer(k, &u^k)` after every step (and once
/// with `k = 0` for the initial state).
pub fn solve_with_observer(
    problem: &Problem,
    cfg: &ValidatedConfig,
    init: Option<PrimalDualState>,
    mut observer: impl FnMut(usize, &PrimalDualState),
) -> Result<SolveOutcome> {
    let cfg = cfg.config();
    let mut state = init.unwrap_or_else(|| PrimalDualState::zeros(problem, cfg.algorithm));
    if cfg.algorithm == Algorithm::Pdfp2oc && state.v2.is_none() {
        state.v2 = Some(vec![0.0; problem.primal_dim()]);
    }
    observer(0, &state);

    let start = Instant::now();
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut k = 0;
    while k < cfg.max_iter {
        let next = step(problem, cfg, &state)?;
        k += 1;
        residual = next.lambda_dist(&state, cfg.lambda);
        state = next;
        observer(k, &state);
        converged = residual <= cfg.fp_tol;
        if k % cfg.record_every == 0 || converged || k == cfg.max_iter {
            history.push(record(problem, cfg, &state, k, residual, start));
        }
        if converged {
            break;
        }
    }
    Ok(SolveOutcome {
        state,
        history,
        iterations: k,
        converged,
        final_residual: residual,
    })
}

fn record(
    problem: &Problem,
    cfg: &SolverConfig,
    state: &PrimalDualState,
    iter: usize,
    residual: f64,
    start: Instant,
) -> IterationRecord {
    let dual = state.natural_dual(cfg.gamma, cfg.lambda);
    IterationRecord {
        iter,
        objective: objective(problem, &state.x),
        fp_residual_lambda: residual,
        kkt_residual: kkt_residual(problem, &state.x, &dual),
        feasibility_violation: feasibility_violation(problem, &state.x),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}
