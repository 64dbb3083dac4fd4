//! Convergence diagnostics: reference solutions, a brute-force grid oracle,
//! monotonicity and linear-rate checks, support recovery, CSV histories.

mod csv;
mod oracle;

pub use csv::{emit_history_csv, parse_history_csv, read_history_csv, write_history_csv, HISTORY_HEADER};
pub use oracle::{grid_oracle, GridOracleResult};

use crate::error::{Error, Result};
use crate::problems::kkt_residual;
use crate::solver::{solve, PrimalDualState, Problem, ValidatedConfig};

/// Per-iteration diagnostics recorded by the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub fp_residual_lambda: f64,
    pub kkt_residual: f64,
    pub feasibility_violation: f64,
    pub elapsed_ms: f64,
}

/// A high-accuracy stand-in for `u*`.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub state: PrimalDualState,
    pub iterations: usize,
    pub fp_residual: f64,
    pub kkt_residual: f64,
    /// False when the budget ran out with a KKT residual above `1e-6`.
    pub converged: bool,
}

pub const REFERENCE_FP_TOL: f64 = 1e-13;
pub const REFERENCE_DEFAULT_ITER: usize = 1_000_000;
const REFERENCE_KKT_FLAG: f64 = 1e-6;

/// Runs `cfg`'s scheme for up to `big_iter` steps or until the fixed-point
/// residual reaches `1e-13`.
pub fn reference_solution(
    problem: &Problem,
    cfg: &ValidatedConfig,
    big_iter: usize,
) -> Result<ReferenceSolution> {
    let run_cfg = cfg.with_budget(big_iter, REFERENCE_FP_TOL, big_iter.max(1));
    let out = solve(problem, &run_cfg, None)?;
    let dual = out.state.natural_dual(cfg.gamma, cfg.lambda);
    let kkt = kkt_residual(problem, &out.state.x, &dual);
    Ok(ReferenceSolution {
        iterations: out.iterations,
        fp_residual: out.final_residual,
        kkt_residual: kkt,
        converged: out.converged || kkt <= REFERENCE_KKT_FLAG,
        state: out.state,
    })
}

/// Largest increase `‖u^{k+1} − u*‖_λ − ‖u^k − u*‖_λ` along `states`
/// (0 when the distances never increase).
pub fn monotonicity_check(states: &[PrimalDualState], u_star: &PrimalDualState, lambda: f64) -> f64 {
    let d: Vec<f64> = states.iter().map(|s| s.lambda_dist(u_star, lambda)).collect();
    max_increase(&d)
}

/// Largest increase between consecutive entries, clamped at 0.
pub fn max_increase(distances: &[f64]) -> f64 {
    distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

/// Default window for rate estimation: skip the first 20% of the run.
pub fn default_rate_window(num_states: usize) -> (usize, usize) {
    let end = num_states.saturating_sub(1);
    (end / 5, end)
}

/// Geometric-mean contraction ratio of `‖u^k − u*‖_w` over
/// `window = (start, end)`, where `‖(v, x)‖_w = √(w‖v‖² + ‖x‖²)`.
///
/// For the linear-rate bound use `w = (1 + λδ/γ)λ`. If a distance in the
/// window is exactly zero the window is truncated there (giving ratio 0).
pub fn rate_estimate(
    states: &[PrimalDualState],
    u_star: &PrimalDualState,
    weight: f64,
    window: (usize, usize),
) -> Result<f64> {
    let (start, end) = window;
    if start >= end || end >= states.len() {
        return Err(Error::InvalidParameter(format!(
            "rate window ({start}, {end}) invalid for {} states",
            states.len()
        )));
    }
    let d0 = states[start].lambda_dist(u_star, weight);
    if d0 == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "distance to the reference is zero at the window start {start}"
        )));
    }
    let mut last = (end, states[end].lambda_dist(u_star, weight));
    for (k, s) in states.iter().enumerate().take(end + 1).skip(start + 1) {
        let d = s.lambda_dist(u_star, weight);
        if d == 0.0 {
            last = (k, 0.0);
            break;
        }
    }
    let (k, dk) = last;
    Ok((dk / d0).powf(1.0 / (k - start) as f64))
}

/// Contraction factors of the linear-rate bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoreticalRate {
    /// `1/√(1 + λδ/γ)`
    pub eta1: f64,
    /// Lipschitz constant of `x ↦ x − γ∇f₁(x)`.
    pub eta2: f64,
    /// `max(η₁, η₂)`
    pub eta: f64,
    /// Strong-monotonicity modulus of `∂f₂*`.
    pub delta: f64,
}

/// `η₁ = 1/√(1+λδ/γ)`, `η = max(η₁, η₂)`.
///
/// `δ` is the modulus of `∂f₂*` itself (for `f₂ = (w/2)‖·‖²`, `δ = 1/w`).
/// Fails when `η₂ ∉ [0, 1)` since the contraction condition is then void.
pub fn theoretical_rate(lambda: f64, gamma: f64, delta: f64, eta2: f64) -> Result<TheoreticalRate> {
    for (name, v) in [("lambda", lambda), ("gamma", gamma)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    if !(0.0..1.0).contains(&eta2) {
        return Err(Error::InvalidParameter(format!(
            "eta2 = {eta2} outside [0, 1): x - gamma grad f1(x) is not a contraction"
        )));
    }
    let eta1 = 1.0 / (1.0 + lambda * delta / gamma).sqrt();
    Ok(TheoreticalRate {
        eta1,
        eta2,
        eta: eta1.max(eta2),
        delta,
    })
}

/// `η₂` for a quadratic `f₁` whose Hessian spectrum lies in
/// `[s_min, s_max]`: `max(|1 − γ s_min|, |1 − γ s_max|)`.
pub fn eta2_quadratic(gamma: f64, s_min: f64, s_max: f64) -> f64 {
    (1.0 - gamma * s_min).abs().max((1.0 - gamma * s_max).abs())
}

/// Observed versus predicted contraction over a window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub eta_observed: f64,
    pub eta_theoretical: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub delta: f64,
    pub window: (usize, usize),
}

/// Builds a [`RateReport`] from a run, measuring distances in the
/// `(1 + λδ/γ)λ`-weighted norm.
pub fn rate_report(
    states: &[PrimalDualState],
    u_star: &PrimalDualState,
    lambda: f64,
    gamma: f64,
    delta: f64,
    eta2: f64,
    window: (usize, usize),
) -> Result<RateReport> {
    let theory = theoretical_rate(lambda, gamma, delta, eta2)?;
    let weight = (1.0 + lambda * delta / gamma) * lambda;
    let observed = rate_estimate(states, u_star, weight, window)?;
    Ok(RateReport {
        eta_observed: observed,
        eta_theoretical: theory.eta,
        eta1: theory.eta1,
        eta2: theory.eta2,
        delta,
        window,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Support recovery with support `{i : |xᵢ| > threshold}`.
///
/// Empty-denominator conventions: precision (recall) is 1 when both the
/// estimated and true supports are empty, and 0 when only the estimated
/// (true) support is empty.
pub fn support_metrics(x_est: &[f64], x_true: &[f64], threshold: f64) -> Result<SupportMetrics> {
    crate::error::check_len("support_metrics", x_true.len(), x_est.len())?;
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be >= 0, got {threshold}")));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (e, t) in x_est.iter().zip(x_true) {
        match (e.abs() > threshold, t.abs() > threshold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let both_empty = tp + fp == 0 && tp + fn_ == 0;
    let ratio = |num: usize, den: usize| {
        if den > 0 {
            num as f64 / den as f64
        } else if both_empty {
            1.0
        } else {
            0.0
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(SupportMetrics { precision, recall, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: &[f64], x: &[f64]) -> PrimalDualState {
        PrimalDualState { v: v.to_vec(), x: x.to_vec(), v2: None }
    }

    #[test]
    fn monotonicity_of_constant_sequence_is_zero() {
        let u = st(&[1.0], &[2.0, 3.0]);
        let states = vec![u.clone(), u.clone(), u.clone()];
        assert_eq!(monotonicity_check(&states, &u, 0.5), 0.0);
    }

    #[test]
    fn monotonicity_detects_increase() {
        let star = st(&[0.0], &[0.0]);
        let states = vec![st(&[0.0], &[1.0]), st(&[0.0], &[0.5]), st(&[0.0], &[0.7])];
        assert!((monotonicity_check(&states, &star, 1.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rate_of_exact_one_step_convergence_is_zero() {
        let star = st(&[1.0], &[1.0]);
        let states = vec![st(&[0.0], &[0.0]), star.clone()];
        assert_eq!(rate_estimate(&states, &star, 1.0, (0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn rate_of_geometric_sequence() {
        let star = st(&[0.0], &[0.0]);
        let states: Vec<_> = (0..30).map(|k| st(&[0.0], &[0.8f64.powi(k)])).collect();
        let r = rate_estimate(&states, &star, 1.0, default_rate_window(states.len())).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert!(rate_estimate(&states, &star, 1.0, (5, 5)).is_err());
        assert!(rate_estimate(&states, &star, 1.0, (0, 30)).is_err());
    }

    #[test]
    fn theoretical_rate_examples() {
        // λδ/γ = 3 → η₁ = 1/2
        let t = theoretical_rate(0.3, 0.1, 1.0, 0.2).unwrap();
        assert!((t.eta1 - 0.5).abs() < 1e-15);
        assert_eq!(t.eta, t.eta1);
        let t = theoretical_rate(0.3, 0.1, 1.0, 0.9).unwrap();
        assert_eq!(t.eta, 0.9);
        let t = theoretical_rate(0.3, 0.1, 1e-14, 0.2).unwrap();
        assert!((t.eta1 - 1.0).abs() < 1e-12);
        assert!(theoretical_rate(0.3, 0.1, 1.0, 1.0).is_err());
        assert!(theoretical_rate(0.0, 0.1, 1.0, 0.5).is_err());
    }

    #[test]
    fn eta2_for_quadratics() {
        assert!((eta2_quadratic(0.2, 1.0, 5.0) - 0.8).abs() < 1e-15);
        assert!((eta2_quadratic(0.5, 1.0, 5.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn support_examples() {
        let t = [0.0, 1.0, -2.0, 0.0];
        assert_eq!(
            support_metrics(&t, &t, 1e-3).unwrap(),
            SupportMetrics { precision: 1.0, recall: 1.0, f1: 1.0 }
        );
        let m = support_metrics(&[0.0; 4], &t, 1e-3).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        let m = support_metrics(&[0.0, 1.0, 0.0, 5.0], &t, 1e-3).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        assert!(support_metrics(&[0.0], &t, 1e-3).is_err());
    }
}
