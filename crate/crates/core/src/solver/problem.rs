use crate::error::{check_len, Error, Result};
use crate::operator::{LinearMap, OpNormEstimate};
use crate::prox::{LazyOpNorm, ProxFn, SmoothFn};

/// `min_x f₁(x) + f₂(Bx) + f₃(x)`.
#[derive(Clone, Debug)]
pub struct Problem {
    f1: SmoothFn,
    f2: ProxFn,
    b: LinearMap,
    f3: ProxFn,
    b_norm: LazyOpNorm,
}

impl Problem {
    pub fn new(f1: SmoothFn, f2: ProxFn, b: LinearMap, f3: ProxFn) -> Result<Self> {
        if let Some(n) = f1.dim() {
            check_len("f1 primal dimension vs B.in_dim", b.in_dim(), n)?;
        }
        if let ProxFn::IndicatorBox { lo, .. } = &f3 {
            check_len("f3 box bounds vs primal dimension", b.in_dim(), lo.len())?;
        }
        if let ProxFn::IndicatorBox { lo, .. } = &f2 {
            check_len("f2 box bounds vs dual dimension", b.out_dim(), lo.len())?;
        }
        if matches!(f2, ProxFn::GroupL1Pairs { .. }) && !b.out_dim().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "group l1 pairs on an odd dual dimension {}",
                b.out_dim()
            )));
        }
        if matches!(f3, ProxFn::GroupL1Pairs { .. }) && !b.in_dim().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "group l1 pairs on an odd primal dimension {}",
                b.in_dim()
            )));
        }
        Ok(Self {
            f1,
            f2,
            b,
            f3,
            b_norm: LazyOpNorm::default(),
        })
    }

    pub fn f1(&self) -> &SmoothFn {
        &self.f1
    }

    pub fn f2(&self) -> &ProxFn {
        &self.f2
    }

    pub fn b(&self) -> &LinearMap {
        &self.b
    }

    pub fn f3(&self) -> &ProxFn {
        &self.f3
    }

    pub fn primal_dim(&self) -> usize {
        self.b.in_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.b.out_dim()
    }

    /// `λmax(BBᵀ)` from the default power method, computed once.
    pub fn b_norm_sq(&self) -> OpNormEstimate {
        self.b_norm.get_or_compute(&self.b)
    }

    /// True when the smooth term imposes no step restriction (`β = +∞`).
    pub fn smooth_is_absent(&self) -> bool {
        self.f1.beta().is_infinite()
    }
}
