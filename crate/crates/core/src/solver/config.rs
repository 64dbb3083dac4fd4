use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operator::OpNormEstimate;

use super::Problem;

/// Iteration scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Three-block primal-dual fixed point scheme (two `f₃` proxes per step).
    Pdfp,
    /// The `f₃ = 0` special case.
    Pdfp2o,
    /// `f₃ = χ_C` handled by a second dual variable.
    Pdfp2oc,
    /// Condat's primal-dual scheme with unit relaxation.
    Condat,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Pdfp, Self::Pdfp2o, Self::Pdfp2oc, Self::Condat];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pdfp => "pdfp",
            Self::Pdfp2o => "pdfp2o",
            Self::Pdfp2oc => "pdfp2oc",
            Self::Condat => "condat",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pdfp" => Ok(Self::Pdfp),
            "pdfp2o" => Ok(Self::Pdfp2o),
            "pdfp2oc" | "pdfp2o_c" => Ok(Self::Pdfp2oc),
            "condat" => Ok(Self::Condat),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm `{other}` (expected pdfp, pdfp2o, pdfp2oc or condat)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once `‖u^{k+1} − u^k‖_λ ≤ fp_tol`.
    pub fp_tol: f64,
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, gamma: f64, lambda: f64) -> Self {
        Self {
            algorithm,
            gamma,
            lambda,
            max_iter: 1000,
            fp_tol: 1e-8,
            record_every: 1,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_fp_tol(mut self, fp_tol: f64) -> Self {
        self.fp_tol = fp_tol;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn condat_params(&self) -> CondatParams {
        CondatParams::from_pdfp(self.gamma, self.lambda)
    }
}

/// Condat's `(σ, τ)` and the PDFP pair `(γ, λ)` are related by
/// `σ = λ/γ`, `τ = γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondatParams {
    pub sigma: f64,
    pub tau: f64,
}

impl CondatParams {
    pub fn from_pdfp(gamma: f64, lambda: f64) -> Self {
        Self {
            sigma: lambda / gamma,
            tau: gamma,
        }
    }

    /// `(γ, λ)`
    pub fn to_pdfp(self) -> (f64, f64) {
        (self.tau, self.sigma * self.tau)
    }
}

/// A configuration whose step sizes passed [`validate_config`].
#[derive(Clone, Debug)]
pub struct ValidatedConfig {
    config: SolverConfig,
    opnorm: OpNormEstimate,
}

impl ValidatedConfig {
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn opnorm(&self) -> OpNormEstimate {
        self.opnorm
    }

    /// Same step sizes with a different iteration budget. Step conditions
    /// do not involve these fields, so validation carries over.
    pub fn with_budget(&self, max_iter: usize, fp_tol: f64, record_every: usize) -> Self {
        let mut next = self.clone();
        next.config.max_iter = max_iter;
        next.config.fp_tol = fp_tol;
        next.config.record_every = record_every.max(1);
        next
    }

    /// Skips the step-size gate. Only structural checks apply; intended for
    /// experiments that deliberately run outside the convergence theory.
    pub fn unchecked(problem: &Problem, config: SolverConfig) -> Result<Self> {
        check_basic(&config)?;
        check_structure(problem, config.algorithm)?;
        Ok(Self {
            opnorm: problem.b_norm_sq(),
            config,
        })
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SolverConfig;

    fn deref(&self) -> &SolverConfig {
        &self.config
    }
}

/// One end of an interval of admissible step sizes, always open at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    pub inclusive: bool,
}

impl UpperBound {
    fn open(value: f64) -> Self {
        Self { value, inclusive: false }
    }

    fn closed(value: f64) -> Self {
        Self { value, inclusive: value.is_finite() }
    }

    pub fn admits(&self, v: f64) -> bool {
        if self.inclusive {
            v <= self.value
        } else {
            v < self.value
        }
    }
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value.is_infinite() {
            write!(f, "(0, ∞)")
        } else if self.inclusive {
            write!(f, "(0, {}]", self.value)
        } else {
            write!(f, "(0, {})", self.value)
        }
    }
}

/// Admissible `(γ, λ)` ranges of one scheme for a given problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleRanges {
    pub algorithm: Algorithm,
    pub gamma: UpperBound,
    /// For Condat this depends on `γ`; see [`admissible_ranges`].
    pub lambda: UpperBound,
}

fn inv(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

/// Step-size ranges under which each scheme is known to converge.
///
/// `gamma` is only consulted for Condat, whose condition
/// `στ λmax(BBᵀ) + τ/(2β) ≤ 1` couples the two parameters.
pub fn admissible_ranges(
    problem: &Problem,
    opnorm: &OpNormEstimate,
    algorithm: Algorithm,
    gamma: f64,
) -> AdmissibleRanges {
    let l = opnorm.value;
    let beta = problem.f1().beta();
    let gamma_range = UpperBound::open(2.0 * beta);
    let lambda = match algorithm {
        Algorithm::Pdfp => UpperBound::open(inv(l)),
        Algorithm::Pdfp2o => UpperBound::closed(inv(l)),
        Algorithm::Pdfp2oc => UpperBound::closed(1.0 / (l + 1.0)),
        Algorithm::Condat => {
            if beta.is_infinite() {
                UpperBound::closed(inv(l))
            } else {
                // στ l + τ/(2β) ≤ 1 with στ = λ, τ = γ
                UpperBound::closed((1.0 - gamma / (2.0 * beta)) * inv(l))
            }
        }
    };
    AdmissibleRanges {
        algorithm,
        gamma: gamma_range,
        lambda,
    }
}

fn check_basic(cfg: &SolverConfig) -> Result<()> {
    for (name, v) in [("gamma", cfg.gamma), ("lambda", cfg.lambda)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    if cfg.record_every == 0 {
        return Err(Error::InvalidParameter("record_every must be at least 1".into()));
    }
    if !(cfg.fp_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fp_tol must be nonnegative, got {}",
            cfg.fp_tol
        )));
    }
    Ok(())
}

fn check_structure(problem: &Problem, algorithm: Algorithm) -> Result<()> {
    match algorithm {
        Algorithm::Pdfp2o if !problem.f3().is_zero() => Err(Error::Unsupported {
            algorithm: "pdfp2o",
            reason: format!("f3 must be the zero function, got {}", problem.f3().kind_name()),
        }),
        Algorithm::Pdfp2oc if !problem.f3().is_indicator() => Err(Error::Unsupported {
            algorithm: "pdfp2oc",
            reason: format!(
                "f3 must be the indicator of a convex set, got {}",
                problem.f3().kind_name()
            ),
        }),
        _ => Ok(()),
    }
}

/// Checks the scheme-specific step-size conditions.
///
/// * PDFP: `0 < λ < 1/λmax(BBᵀ)`, `0 < γ < 2β`
/// * PDFP²O: `0 < λ ≤ 1/λmax(BBᵀ)`, `0 < γ < 2β`
/// * PDFP²O_C: `0 < λ ≤ 1/(λmax(BBᵀ) + 1)`, `0 < γ < 2β`
/// * Condat (`σ = λ/γ`, `τ = γ`): `στ λmax(BBᵀ) + τ/(2β) ≤ 1`, or
///   `στ ≤ 1/λmax(BBᵀ)` without a smooth term.
///
/// Without a smooth term (`β = +∞`) any `γ > 0` is admissible.
pub fn validate_config(
    problem: &Problem,
    cfg: &SolverConfig,
    opnorm: &OpNormEstimate,
) -> Result<ValidatedConfig> {
    check_basic(cfg)?;
    check_structure(problem, cfg.algorithm)?;
    let ranges = admissible_ranges(problem, opnorm, cfg.algorithm, cfg.gamma);
    let l = opnorm.value;
    let beta = problem.f1().beta();

    if cfg.algorithm == Algorithm::Condat {
        let p = cfg.condat_params();
        if beta.is_infinite() {
            // στ = λ exactly; comparing λ avoids rounding in σ·τ at the boundary
            if l > 0.0 && !(cfg.lambda * l <= 1.0) {
                return Err(Error::StepSize {
                    condition: format!(
                        "condat: sigma*tau = {} must satisfy sigma*tau <= 1/lambda_max(BB^T) = {}",
                        p.sigma * p.tau,
                        1.0 / l
                    ),
                    admissible: format!("lambda in {}", ranges.lambda),
                });
            }
        } else {
            let lhs = cfg.lambda * l + cfg.gamma / (2.0 * beta);
            if !(lhs <= 1.0) {
                return Err(Error::StepSize {
                    condition: format!(
                        "condat: sigma*tau*lambda_max(BB^T) + tau/(2 beta) = {lhs} must be <= 1 \
                         (sigma = {}, tau = {})",
                        p.sigma, p.tau
                    ),
                    admissible: format!(
                        "gamma in {}, lambda in {} for gamma = {}",
                        ranges.gamma, ranges.lambda, cfg.gamma
                    ),
                });
            }
        }
        return Ok(ValidatedConfig {
            config: cfg.clone(),
            opnorm: *opnorm,
        });
    }

    if !ranges.gamma.admits(cfg.gamma) {
        return Err(Error::StepSize {
            condition: format!(
                "{}: gamma = {} must satisfy gamma < 2 beta = {}",
                cfg.algorithm,
                cfg.gamma,
                2.0 * beta
            ),
            admissible: format!("gamma in {}", ranges.gamma),
        });
    }
    if !ranges.lambda.admits(cfg.lambda) {
        let bound = match cfg.algorithm {
            Algorithm::Pdfp => "lambda < 1/lambda_max(BB^T)",
            Algorithm::Pdfp2o => "lambda <= 1/lambda_max(BB^T)",
            Algorithm::Pdfp2oc => "lambda <= 1/(lambda_max(BB^T) + 1)",
            Algorithm::Condat => unreachable!(),
        };
        return Err(Error::StepSize {
            condition: format!(
                "{}: lambda = {} must satisfy {bound} = {}",
                cfg.algorithm, cfg.lambda, ranges.lambda.value
            ),
            admissible: format!("lambda in {}", ranges.lambda),
        });
    }
    Ok(ValidatedConfig {
        config: cfg.clone(),
        opnorm: *opnorm,
    })
}
