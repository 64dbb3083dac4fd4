//! Proximity operators for the nonsmooth terms and descriptors for the
//! smooth term.
//!
//! Conventions: `prox(x, t)` of a function `f` returns
//! `argmin_y t·f(y) + ½‖x − y‖²`, i.e. the proximity operator of `t f`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_len, check_positive, Error, Result};
use crate::operator::{LinearMap, OpNormEstimate};
use crate::vector::norm_sq;

/// Soft shrinkage `sign(xᵢ)·max(|xᵢ| − t, 0)`; ties at `|xᵢ| = t` give 0.
pub fn prox_l1(x: &[f64], t: f64) -> Result<Vec<f64>> {
    check_positive("t", t)?;
    Ok(x.iter().map(|&v| shrink(v, t)).collect())
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Isotropic shrinkage of each pair `(pᵢ, qᵢ)` by `max(1 − t/‖(pᵢ,qᵢ)‖, 0)`.
pub fn prox_group_l1_pairs(p: &[f64], q: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("prox_group_l1_pairs", p.len(), q.len())?;
    check_positive("t", t)?;
    let mut po = p.to_vec();
    let mut qo = q.to_vec();
    group_shrink(&mut po, &mut qo, t);
    Ok((po, qo))
}

fn group_shrink(p: &mut [f64], q: &mut [f64], t: f64) {
    for (pi, qi) in p.iter_mut().zip(q.iter_mut()) {
        let r = pi.hypot(*qi);
        if r <= t {
            *pi = 0.0;
            *qi = 0.0;
        } else {
            let s = 1.0 - t / r;
            *pi *= s;
            *qi *= s;
        }
    }
}

pub fn project_nonneg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    check_len("project_box lower bounds", x.len(), lo.len())?;
    check_len("project_box upper bounds", x.len(), hi.len())?;
    check_bounds(lo, hi)?;
    Ok(x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect())
}

fn check_bounds(lo: &[f64], hi: &[f64]) -> Result<()> {
    if let Some(i) = lo.iter().zip(hi).position(|(l, h)| !(l <= h)) {
        return Err(Error::InvalidParameter(format!(
            "inverted box bounds at index {i}: lo {} > hi {}",
            lo[i], hi[i]
        )));
    }
    Ok(())
}

/// Prox of `(w/2)‖·‖²` with step `t`: `x / (1 + t w)`.
pub fn prox_quadratic(x: &[f64], t: f64, w: f64) -> Result<Vec<f64>> {
    check_positive("t", t)?;
    if !(w >= 0.0) {
        return Err(Error::InvalidParameter(format!("weight must be nonnegative, got {w}")));
    }
    let s = 1.0 / (1.0 + t * w);
    Ok(x.iter().map(|v| v * s).collect())
}

/// User-supplied proximable function for library callers.
pub trait Proximable: Send + Sync {
    /// Writes `prox_{t f}(x)` into `out`.
    fn prox_into(&self, x: &[f64], t: f64, out: &mut [f64]);
    fn value(&self, x: &[f64]) -> f64;
    /// Whether `f` is the indicator of a closed convex set (its prox is then
    /// a projection and independent of `t`).
    fn is_indicator(&self) -> bool {
        false
    }
}

/// Nonsmooth terms with closed-form proximity operators.
#[derive(Clone)]
pub enum ProxFn {
    /// `weight · ‖x‖₁`
    L1 { weight: f64 },
    /// `weight · Σᵢ ‖(pᵢ, qᵢ)‖₂` where the argument is `[p; q]` (two equal
    /// halves, as produced by [`LinearMap::Grad2d`]).
    GroupL1Pairs { weight: f64 },
    IndicatorNonneg,
    IndicatorBox { lo: Arc<[f64]>, hi: Arc<[f64]> },
    Zero,
    /// `(weight / 2) · ‖x‖²`
    Quadratic { weight: f64 },
    Custom(Arc<dyn Proximable>),
}

impl fmt::Debug for ProxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::L1 { weight } => write!(f, "L1 {{ weight: {weight} }}"),
            Self::GroupL1Pairs { weight } => write!(f, "GroupL1Pairs {{ weight: {weight} }}"),
            Self::IndicatorNonneg => write!(f, "IndicatorNonneg"),
            Self::IndicatorBox { lo, hi } => write!(f, "IndicatorBox {{ lo: {lo:?}, hi: {hi:?} }}"),
            Self::Zero => write!(f, "Zero"),
            Self::Quadratic { weight } => write!(f, "Quadratic {{ weight: {weight} }}"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ProxFn {
    pub fn l1(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self::L1 { weight })
    }

    pub fn group_l1_pairs(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self::GroupL1Pairs { weight })
    }

    pub fn quadratic(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self::Quadratic { weight })
    }

    pub fn indicator_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len("indicator_box bounds", lo.len(), hi.len())?;
        check_bounds(&lo, &hi)?;
        Ok(Self::IndicatorBox {
            lo: lo.into(),
            hi: hi.into(),
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::L1 { .. } => "l1",
            Self::GroupL1Pairs { .. } => "group_l1_pairs",
            Self::IndicatorNonneg => "indicator_nonneg",
            Self::IndicatorBox { .. } => "indicator_box",
            Self::Zero => "zero",
            Self::Quadratic { .. } => "quadratic",
            Self::Custom(_) => "custom",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::L1 { weight } | Self::GroupL1Pairs { weight } | Self::Quadratic { weight } => {
                *weight == 0.0
            }
            _ => false,
        }
    }

    /// Indicator of a closed convex set. The zero function counts as the
    /// indicator of the whole space.
    pub fn is_indicator(&self) -> bool {
        match self {
            Self::IndicatorNonneg | Self::IndicatorBox { .. } => true,
            Self::Custom(c) => c.is_indicator(),
            other => other.is_zero(),
        }
    }

    fn check_arg(&self, x: &[f64]) -> Result<()> {
        match self {
            Self::GroupL1Pairs { .. } if !x.len().is_multiple_of(2) => Err(Error::InvalidParameter(
                format!("group l1 pairs needs an even-length argument, got {}", x.len()),
            )),
            Self::IndicatorBox { lo, .. } => check_len("indicator_box argument", lo.len(), x.len()),
            _ => Ok(()),
        }
    }

    /// `f(x)`, `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::GroupL1Pairs { weight } => {
                let (p, q) = x.split_at(x.len() / 2);
                weight * p.iter().zip(q).map(|(a, b)| a.hypot(*b)).sum::<f64>()
            }
            Self::IndicatorNonneg => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::IndicatorBox { lo, hi } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(v, (l, h))| l <= v && v <= h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Zero => 0.0,
            Self::Quadratic { weight } => 0.5 * weight * norm_sq(x),
            Self::Custom(c) => c.value(x),
        }
    }

    /// `prox_{t f}(x)`.
    pub fn prox(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_positive("t", t)?;
        self.check_arg(x)?;
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, t, &mut out);
        Ok(out)
    }

    /// Unchecked `prox_{t f}(x)` into `out`.
    pub(crate) fn prox_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self {
            Self::L1 { weight } => {
                let tau = t * weight;
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = shrink(v, tau);
                }
            }
            Self::GroupL1Pairs { weight } => {
                out.copy_from_slice(x);
                let (p, q) = out.split_at_mut(x.len() / 2);
                group_shrink(p, q, t * weight);
            }
            Self::IndicatorNonneg => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = v.max(0.0);
                }
            }
            Self::IndicatorBox { lo, hi } => {
                for (i, (o, &v)) in out.iter_mut().zip(x).enumerate() {
                    *o = v.clamp(lo[i], hi[i]);
                }
            }
            Self::Zero => out.copy_from_slice(x),
            Self::Quadratic { weight } => {
                let s = 1.0 / (1.0 + t * weight);
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = v * s;
                }
            }
            Self::Custom(c) => c.prox_into(x, t, out),
        }
    }

    /// `(I − prox_{t f})(x)`.
    pub fn residual_shrink(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut out = self.prox(x, t)?;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v - *o;
        }
        Ok(out)
    }

    pub(crate) fn residual_shrink_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        self.prox_into(x, t, out);
        for (o, v) in out.iter_mut().zip(x) {
            *o = v - *o;
        }
    }

    /// `prox_{t f*}(x)` through Moreau's decomposition:
    /// `x − t · prox_{f/t}(x / t)`.
    pub fn conjugate_prox(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_positive("t", t)?;
        self.check_arg(x)?;
        let mut out = vec![0.0; x.len()];
        self.conjugate_prox_into(x, t, &mut out);
        Ok(out)
    }

    pub(crate) fn conjugate_prox_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let scaled: Vec<f64> = x.iter().map(|v| v / t).collect();
        self.prox_into(&scaled, 1.0 / t, out);
        for (o, v) in out.iter_mut().zip(x) {
            *o = v - t * *o;
        }
    }
}

fn check_weight(w: f64) -> Result<()> {
    if w >= 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "weight must be finite and nonnegative, got {w}"
        )))
    }
}

/// Free-function form of [`ProxFn::conjugate_prox`].
pub fn conjugate_prox_via_moreau(f: &ProxFn, x: &[f64], t: f64) -> Result<Vec<f64>> {
    f.conjugate_prox(x, t)
}

/// Free-function form of [`ProxFn::residual_shrink`].
pub fn residual_shrink(f: &ProxFn, x: &[f64], t: f64) -> Result<Vec<f64>> {
    f.residual_shrink(x, t)
}

/// The differentiable term `f₁` with `1/β`-Lipschitz gradient.
#[derive(Clone, Debug)]
pub enum SmoothFn {
    /// `f₁ ≡ 0`, `β = +∞`.
    Zero,
    /// `½‖A x − target‖² + (ridge/2)‖x‖²` with `β = 1 / (λmax(AᵀA) + ridge)`.
    LeastSquares(LeastSquares),
}

#[derive(Clone, Debug)]
pub struct LeastSquares {
    a: LinearMap,
    target: Arc<[f64]>,
    ridge: f64,
    a_norm_sq: OpNormEstimate,
}

impl LeastSquares {
    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Power-method estimate of `λmax(AᵀA)`.
    pub fn a_norm_sq(&self) -> OpNormEstimate {
        self.a_norm_sq
    }
}

impl SmoothFn {
    /// `½‖A x − target‖²`, with `β` estimated by the power method on `A`.
    pub fn least_squares(a: LinearMap, target: Vec<f64>) -> Result<Self> {
        Self::ridge_least_squares(a, target, 0.0)
    }

    pub fn ridge_least_squares(a: LinearMap, target: Vec<f64>, ridge: f64) -> Result<Self> {
        let est = a.op_norm_sq()?;
        Self::with_norm_estimate(a, target, ridge, est)
    }

    /// As [`SmoothFn::ridge_least_squares`] with a caller-provided `λmax(AᵀA)`.
    pub fn with_norm_estimate(
        a: LinearMap,
        target: Vec<f64>,
        ridge: f64,
        a_norm_sq: OpNormEstimate,
    ) -> Result<Self> {
        check_len("least-squares target", a.out_dim(), target.len())?;
        check_weight(ridge)?;
        Ok(Self::LeastSquares(LeastSquares {
            a,
            target: target.into(),
            ridge,
            a_norm_sq,
        }))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Inverse Lipschitz constant of the gradient (`+∞` for the zero function).
    pub fn beta(&self) -> f64 {
        match self {
            Self::Zero => f64::INFINITY,
            Self::LeastSquares(ls) => {
                let lip = ls.a_norm_sq.value + ls.ridge;
                if lip > 0.0 {
                    1.0 / lip
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Primal dimension, when the function fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            Self::LeastSquares(ls) => Some(ls.a.in_dim()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::LeastSquares(ls) => {
                let mut ax = vec![0.0; ls.a.out_dim()];
                ls.a.apply_into(x, &mut ax);
                let misfit: f64 = ax.iter().zip(ls.target.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
                0.5 * misfit + 0.5 * ls.ridge * norm_sq(x)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(n) = self.dim() {
            check_len("SmoothFn::gradient", n, x.len())?;
        }
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        Ok(g)
    }

    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Zero => out.fill(0.0),
            Self::LeastSquares(ls) => {
                let mut r = vec![0.0; ls.a.out_dim()];
                ls.a.apply_into(x, &mut r);
                for (ri, ti) in r.iter_mut().zip(ls.target.iter()) {
                    *ri -= ti;
                }
                ls.a.adjoint_into(&r, out);
                if ls.ridge != 0.0 {
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += ls.ridge * xi;
                    }
                }
            }
        }
    }
}

/// Cached `λmax(BBᵀ)` for a map, computed on first use.
#[derive(Debug, Default)]
pub(crate) struct LazyOpNorm(OnceLock<OpNormEstimate>);

impl Clone for LazyOpNorm {
    fn clone(&self) -> Self {
        let cell = OnceLock::new();
        if let Some(v) = self.0.get() {
            let _ = cell.set(*v);
        }
        Self(cell)
    }
}

impl LazyOpNorm {
    pub(crate) fn get_or_compute(&self, map: &LinearMap) -> OpNormEstimate {
        *self.0.get_or_init(|| {
            map.op_norm_sq()
                .expect("default power-method settings are valid")
        })
    }
}
