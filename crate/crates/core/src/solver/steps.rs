//! One application of each fixed-point operator.
//!
//! Dual variables are stored in the PDFP scaling for every scheme: for
//! Condat the state holds `v = (γ/λ) v̄`, so the λ-norm residual and the
//! natural dual `(λ/γ) v ∈ ∂f₂(Bx)` mean the same thing across schemes.

use crate::error::{check_len, Error, Result};
use crate::vector::axpy;

use super::{Algorithm, PrimalDualState, Problem, SolverConfig};

fn check_state(problem: &Problem, state: &PrimalDualState) -> Result<()> {
    check_len("state.x", problem.primal_dim(), state.x.len())?;
    check_len("state.v", problem.dual_dim(), state.v.len())?;
    if let Some(v2) = &state.v2 {
        check_len("state.v2", problem.primal_dim(), v2.len())?;
    }
    Ok(())
}

/// `x − γ ∇f₁(x)`; the gradient is evaluated once per step.
fn forward_step(problem: &Problem, gamma: f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    problem.f1().gradient_into(x, &mut g);
    let mut base = x.to_vec();
    axpy(-gamma, &g, &mut base);
    base
}

/// `base − λ Bᵀ v`
fn dual_correction(problem: &Problem, lambda: f64, base: &[f64], v: &[f64]) -> Vec<f64> {
    let mut btv = vec![0.0; base.len()];
    problem.b().adjoint_into(v, &mut btv);
    let mut out = base.to_vec();
    axpy(-lambda, &btv, &mut out);
    out
}

/// `(I − prox_{(γ/λ) f₂})(B y + v)`
fn dual_update(problem: &Problem, gamma: f64, lambda: f64, y: &[f64], v: &[f64]) -> Vec<f64> {
    let mut arg = vec![0.0; v.len()];
    problem.b().apply_into(y, &mut arg);
    axpy(1.0, v, &mut arg);
    let mut out = vec![0.0; v.len()];
    problem.f2().residual_shrink_into(&arg, gamma / lambda, &mut out);
    out
}

/// One PDFP step; returns the next state and the intermediate `y^{k+1}`.
///
/// ```text
/// y  = prox_{γf₃}(x − γ∇f₁(x) − λBᵀv)
/// v' = (I − prox_{(γ/λ)f₂})(By + v)
/// x' = prox_{γf₃}(x − γ∇f₁(x) − λBᵀv')
/// ```
pub fn pdfp_step(
    problem: &Problem,
    cfg: &SolverConfig,
    state: &PrimalDualState,
) -> Result<(PrimalDualState, Vec<f64>)> {
    check_state(problem, state)?;
    let (gamma, lambda) = (cfg.gamma, cfg.lambda);
    let base = forward_step(problem, gamma, &state.x);

    let arg = dual_correction(problem, lambda, &base, &state.v);
    let mut y = vec![0.0; arg.len()];
    problem.f3().prox_into(&arg, gamma, &mut y);

    let v = dual_update(problem, gamma, lambda, &y, &state.v);

    let arg = dual_correction(problem, lambda, &base, &v);
    let mut x = vec![0.0; arg.len()];
    problem.f3().prox_into(&arg, gamma, &mut x);

    Ok((PrimalDualState { v, x, v2: None }, y))
}

/// PDFP with `prox_{γf₃}` replaced by the identity; requires `f₃ = 0`.
pub fn pdfp2o_step(
    problem: &Problem,
    cfg: &SolverConfig,
    state: &PrimalDualState,
) -> Result<(PrimalDualState, Vec<f64>)> {
    if !problem.f3().is_zero() {
        return Err(Error::Unsupported {
            algorithm: "pdfp2o",
            reason: format!("f3 must be the zero function, got {}", problem.f3().kind_name()),
        });
    }
    check_state(problem, state)?;
    let (gamma, lambda) = (cfg.gamma, cfg.lambda);
    let base = forward_step(problem, gamma, &state.x);
    let y = dual_correction(problem, lambda, &base, &state.v);
    let v = dual_update(problem, gamma, lambda, &y, &state.v);
    let x = dual_correction(problem, lambda, &base, &v);
    Ok((PrimalDualState { v, x, v2: None }, y))
}

/// PDFP²O_C: `f₃ = χ_C` handled through a second dual variable `v₂`.
///
/// ```text
/// y   = x − γ∇f₁(x) − λBᵀv₁ − λv₂
/// v₁' = (I − prox_{(γ/λ)f₂})(By + v₁)
/// v₂' = (I − proj_C)(y + v₂)
/// x'  = x − γ∇f₁(x) − λBᵀv₁' − λv₂'
/// ```
/// A missing `v₂` is treated as zero.
pub fn pdfp2oc_step(
    problem: &Problem,
    cfg: &SolverConfig,
    state: &PrimalDualState,
) -> Result<PrimalDualState> {
    if !problem.f3().is_indicator() {
        return Err(Error::Unsupported {
            algorithm: "pdfp2oc",
            reason: format!(
                "f3 must be the indicator of a convex set, got {}",
                problem.f3().kind_name()
            ),
        });
    }
    check_state(problem, state)?;
    let (gamma, lambda) = (cfg.gamma, cfg.lambda);
    let n = problem.primal_dim();
    let zeros;
    let v2 = match &state.v2 {
        Some(v2) => v2.as_slice(),
        None => {
            zeros = vec![0.0; n];
            &zeros
        }
    };

    let base = forward_step(problem, gamma, &state.x);
    let mut y = dual_correction(problem, lambda, &base, &state.v);
    axpy(-lambda, v2, &mut y);

    let v1_next = dual_update(problem, gamma, lambda, &y, &state.v);

    let mut arg: Vec<f64> = y.iter().zip(v2).map(|(a, b)| a + b).collect();
    let mut proj = vec![0.0; n];
    // projections ignore the step
    problem.f3().prox_into(&arg, 1.0, &mut proj);
    for (a, p) in arg.iter_mut().zip(&proj) {
        *a -= p;
    }
    let v2_next = arg;

    let mut x = dual_correction(problem, lambda, &base, &v1_next);
    axpy(-lambda, &v2_next, &mut x);

    Ok(PrimalDualState {
        v: v1_next,
        x,
        v2: Some(v2_next),
    })
}

/// Condat's scheme with `σ = λ/γ`, `τ = γ`:
///
/// ```text
/// v̄' = prox_{σf₂*}(σBx + v̄)
/// x'  = prox_{τf₃}(x − τ∇f₁(x) − τBᵀ(2v̄' − v̄))
/// ```
/// with `prox_{σf₂*}` evaluated through Moreau's decomposition.
pub fn condat_step(
    problem: &Problem,
    cfg: &SolverConfig,
    state: &PrimalDualState,
) -> Result<PrimalDualState> {
    check_state(problem, state)?;
    let p = cfg.condat_params();
    let (sigma, tau) = (p.sigma, p.tau);
    // v̄ = (λ/γ) v = σ v
    let vbar: Vec<f64> = state.v.iter().map(|v| sigma * v).collect();

    let mut arg = vec![0.0; vbar.len()];
    problem.b().apply_into(&state.x, &mut arg);
    for (a, vb) in arg.iter_mut().zip(&vbar) {
        *a = sigma * *a + vb;
    }
    let mut vbar_next = vec![0.0; vbar.len()];
    problem.f2().conjugate_prox_into(&arg, sigma, &mut vbar_next);

    let extrapolated: Vec<f64> = vbar_next
        .iter()
        .zip(&vbar)
        .map(|(n, o)| 2.0 * n - o)
        .collect();
    let base = forward_step(problem, tau, &state.x);
    let arg = dual_correction(problem, tau, &base, &extrapolated);
    let mut x = vec![0.0; arg.len()];
    problem.f3().prox_into(&arg, tau, &mut x);

    let v = vbar_next.iter().map(|vb| vb / sigma).collect();
    Ok(PrimalDualState { v, x, v2: None })
}

/// Dispatches one step of the configured scheme.
pub fn step(problem: &Problem, cfg: &SolverConfig, state: &PrimalDualState) -> Result<PrimalDualState> {
    match cfg.algorithm {
        Algorithm::Pdfp => pdfp_step(problem, cfg, state).map(|(s, _)| s),
        Algorithm::Pdfp2o => pdfp2o_step(problem, cfg, state).map(|(s, _)| s),
        Algorithm::Pdfp2oc => pdfp2oc_step(problem, cfg, state),
        Algorithm::Condat => condat_step(problem, cfg, state),
    }
}
