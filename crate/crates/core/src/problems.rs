//! Benchmark problem builders, synthetic data, and objective / KKT
//! evaluation.

use crate::error::{check_len, Error, Result};
use crate::operator::LinearMap;
use crate::prox::{ProxFn, SmoothFn};
use crate::rng::SplitMix64;
use crate::solver::Problem;
use crate::vector::{dist_sq, norm};

/// Parameters of a synthetic fused-LASSO instance
/// `½‖Ax − a‖² + μ₁‖Bx‖₁ + μ₂‖x‖₁` with `B` the first difference.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedLassoSpec {
    /// Number of observations (rows of `A`).
    pub r: usize,
    /// Number of variables.
    pub n: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub noise_sigma: f64,
    /// Number of nonzero constant blocks in `x_true`.
    pub sparsity: usize,
    pub seed: u64,
}

impl FusedLassoSpec {
    fn check(&self) -> Result<()> {
        if self.r < 1 || self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "fused lasso needs r >= 1 and n >= 2, got r = {}, n = {}",
                self.r, self.n
            )));
        }
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("noise_sigma", self.noise_sigma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.sparsity > self.n {
            return Err(Error::InvalidParameter(format!(
                "sparsity {} exceeds n = {}",
                self.sparsity, self.n
            )));
        }
        Ok(())
    }
}

/// Synthetic data: design `A`, observations `a`, and ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub a: LinearMap,
    pub target: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// Block length used for `sparsity` blocks among `n` variables.
pub fn fused_block_len(n: usize, sparsity: usize) -> usize {
    if sparsity == 0 {
        0
    } else {
        (n / (10 * sparsity)).max(1)
    }
}

/// Draws `A` (row-major, i.i.d. standard normal), then `x_true`, then the
/// noise `e`, all from one SplitMix64 stream seeded with `spec.seed`, and
/// sets `a = A x_true + σ e`.
///
/// `x_true` consists of `sparsity` constant blocks of length
/// [`fused_block_len`]. Block `j` lies in the `j`-th of `sparsity` equal
/// segments of `0..n`, at an offset drawn uniformly within the segment;
/// its value has a random sign and magnitude uniform in `[1, 2)`.
pub fn synthesize_fused_lasso(spec: &FusedLassoSpec) -> Result<SyntheticData> {
    spec.check()?;
    let (r, n) = (spec.r, spec.n);
    let mut rng = SplitMix64::new(spec.seed);
    let data = rng.normal_vec(r * n);
    let a = LinearMap::dense_from_row_major(r, n, data)?;

    let mut x_true = vec![0.0; n];
    let len = fused_block_len(n, spec.sparsity);
    for j in 0..spec.sparsity {
        let seg_start = j * n / spec.sparsity;
        let seg_end = (j + 1) * n / spec.sparsity;
        let room = (seg_end - seg_start).saturating_sub(len) + 1;
        let start = seg_start + rng.below(room);
        let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let value = sign * rng.uniform(1.0, 2.0);
        for xi in x_true.iter_mut().skip(start).take(len.min(seg_end - start)) {
            *xi = value;
        }
    }

    let noise = rng.normal_vec(r);
    let mut target = a.apply(&x_true)?;
    for (t, e) in target.iter_mut().zip(&noise) {
        *t += spec.noise_sigma * e;
    }
    Ok(SyntheticData { a, target, x_true })
}

/// `f₁ = ½‖Ax − a‖²`, `f₂ = μ₁‖·‖₁`, `B` = first difference, `f₃ = μ₂‖·‖₁`
/// (the zero function when `μ₂ = 0`).
pub fn build_fused_lasso(a: LinearMap, target: Vec<f64>, mu1: f64, mu2: f64) -> Result<Problem> {
    check_len("fused lasso observations", a.out_dim(), target.len())?;
    let n = a.in_dim();
    let b = LinearMap::first_difference(n)?;
    let f1 = SmoothFn::least_squares(a, target)?;
    let f2 = if mu1 == 0.0 { ProxFn::Zero } else { ProxFn::l1(mu1)? };
    let f3 = if mu2 == 0.0 { ProxFn::Zero } else { ProxFn::l1(mu2)? };
    Problem::new(f1, f2, b, f3)
}

/// Row-major blur kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub data: Vec<f64>,
    pub kh: usize,
    pub kw: usize,
}

impl Kernel {
    /// Normalized `size x size` Gaussian with standard deviation `sigma`.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if size == 0 || !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian kernel needs size >= 1 and sigma > 0, got {size}, {sigma}"
            )));
        }
        let c = (size as f64 - 1.0) / 2.0;
        let mut data = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
                data.push((-d2 / (2.0 * sigma * sigma)).exp());
            }
        }
        let s: f64 = data.iter().sum();
        data.iter_mut().for_each(|v| *v /= s);
        Ok(Self { data, kh: size, kw: size })
    }

    /// `size x size` moving average.
    pub fn box_blur(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("box kernel size must be >= 1".into()));
        }
        let w = 1.0 / (size * size) as f64;
        Ok(Self { data: vec![w; size * size], kh: size, kw: size })
    }
}

/// Parameters of a synthetic TV restoration instance
/// `min_{x ∈ C} ½‖Kx − a‖² + μ‖∇x‖_{2,1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TvRestorationSpec {
    pub height: usize,
    pub width: usize,
    pub kernel: Kernel,
    pub mu: f64,
    pub noise_sigma: f64,
    pub nonneg: bool,
    pub seed: u64,
}

/// Checkerboard with `max(1, min(h, w) / 4)`-pixel cells alternating 0 and 1,
/// starting with 1 in the top-left cell.
pub fn checkerboard(height: usize, width: usize) -> Vec<f64> {
    let cell = (height.min(width) / 4).max(1);
    let mut img = Vec::with_capacity(height * width);
    for i in 0..height {
        for j in 0..width {
            img.push(if (i / cell + j / cell).is_multiple_of(2) { 1.0 } else { 0.0 });
        }
    }
    img
}

/// Blurs the checkerboard ground truth with the periodic kernel and adds
/// `σ·e`, `e` standard normal from SplitMix64 seeded with `spec.seed`.
pub fn synthesize_tv_restoration(spec: &TvRestorationSpec) -> Result<SyntheticData> {
    let x_true = checkerboard(spec.height, spec.width);
    synthesize_tv_from_image(spec, x_true)
}

/// As [`synthesize_tv_restoration`] with a caller-provided ground truth.
pub fn synthesize_tv_from_image(spec: &TvRestorationSpec, x_true: Vec<f64>) -> Result<SyntheticData> {
    if spec.height < 2 || spec.width < 2 {
        return Err(Error::InvalidParameter(format!(
            "image must be at least 2x2, got {}x{}",
            spec.height, spec.width
        )));
    }
    if !(spec.mu >= 0.0) || !(spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("mu and noise_sigma must be >= 0".into()));
    }
    check_len("ground-truth image", spec.height * spec.width, x_true.len())?;
    let a = LinearMap::conv2d_periodic(
        spec.kernel.data.clone(),
        spec.kernel.kh,
        spec.kernel.kw,
        spec.height,
        spec.width,
    )?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut target = a.apply(&x_true)?;
    for t in target.iter_mut() {
        *t += spec.noise_sigma * rng.normal();
    }
    Ok(SyntheticData { a, target, x_true })
}

/// `f₁ = ½‖Ax − a‖²`, `f₂ = μ Σ‖(∇ₕx, ∇ᵥx)ᵢ‖`, `B = ∇`, `f₃ = χ_{x ≥ 0}`
/// when `nonneg`, else zero.
pub fn build_tv_restoration(
    a: LinearMap,
    target: Vec<f64>,
    height: usize,
    width: usize,
    mu: f64,
    nonneg: bool,
) -> Result<Problem> {
    check_len("image operator input", height * width, a.in_dim())?;
    check_len("observations", a.out_dim(), target.len())?;
    let b = LinearMap::grad2d(height, width)?;
    let f1 = SmoothFn::least_squares(a, target)?;
    let f2 = if mu == 0.0 { ProxFn::Zero } else { ProxFn::group_l1_pairs(mu)? };
    let f3 = if nonneg { ProxFn::IndicatorNonneg } else { ProxFn::Zero };
    Problem::new(f1, f2, b, f3)
}

/// `f₁(x) + f₂(Bx) + f₃(x)`; `+∞` outside the constraint set.
pub fn objective(problem: &Problem, x: &[f64]) -> f64 {
    let f3 = problem.f3().value(x);
    if f3.is_infinite() {
        return f3;
    }
    let mut bx = vec![0.0; problem.dual_dim()];
    problem.b().apply_into(x, &mut bx);
    problem.f1().value(x) + problem.f2().value(&bx) + f3
}

/// `x` projected onto the constraint set when `f₃` is an indicator, else `x`.
pub fn feasible_point(problem: &Problem, x: &[f64]) -> Vec<f64> {
    if problem.f3().is_indicator() && !problem.f3().is_zero() {
        let mut p = vec![0.0; x.len()];
        problem.f3().prox_into(x, 1.0, &mut p);
        p
    } else {
        x.to_vec()
    }
}

/// Objective at [`feasible_point`]; finite for iterates of schemes whose
/// primal sequence is only asymptotically feasible.
pub fn projected_objective(problem: &Problem, x: &[f64]) -> f64 {
    objective(problem, &feasible_point(problem, x))
}

/// Euclidean distance from `x` to the constraint set (0 without one).
pub fn feasibility_violation(problem: &Problem, x: &[f64]) -> f64 {
    if problem.f3().is_indicator() && !problem.f3().is_zero() {
        dist_sq(x, &feasible_point(problem, x)).sqrt()
    } else {
        0.0
    }
}

/// Reference step pair `(γ, λ) = (1, 0.5/λmax(BBᵀ))` used by
/// [`kkt_residual`]; `λ = 1` when `B = 0`.
pub fn kkt_reference_steps(problem: &Problem) -> (f64, f64) {
    let l = problem.b_norm_sq().value;
    (1.0, if l > 0.0 { 0.5 / l } else { 1.0 })
}

/// Fixed-point residual of the PDFP operator at the reference steps:
///
/// ```text
/// ‖x − prox_{γf₃}(x − γ∇f₁(x) − λBᵀv)‖ + ‖v − (I − prox_{(γ/λ)f₂})(Bx + v)‖
/// ```
///
/// where `v = (γ/λ)·dual` and `dual` is the unscaled multiplier (an element
/// of `∂f₂(Bx)` at a solution; see `PrimalDualState::natural_dual`). Zero
/// exactly at solutions.
pub fn kkt_residual(problem: &Problem, x: &[f64], dual: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), problem.primal_dim());
    debug_assert_eq!(dual.len(), problem.dual_dim());
    let (gamma, lambda) = kkt_reference_steps(problem);
    let v: Vec<f64> = dual.iter().map(|w| w * gamma / lambda).collect();

    let mut grad = vec![0.0; x.len()];
    problem.f1().gradient_into(x, &mut grad);
    let mut btv = vec![0.0; x.len()];
    problem.b().adjoint_into(&v, &mut btv);
    let arg: Vec<f64> = x
        .iter()
        .zip(grad.iter().zip(&btv))
        .map(|(xi, (g, b))| xi - gamma * g - lambda * b)
        .collect();
    let mut px = vec![0.0; x.len()];
    problem.f3().prox_into(&arg, gamma, &mut px);
    let primal = dist_sq(x, &px).sqrt();

    let mut bx = vec![0.0; v.len()];
    problem.b().apply_into(x, &mut bx);
    for (b, vi) in bx.iter_mut().zip(&v) {
        *b += vi;
    }
    let mut rv = vec![0.0; v.len()];
    problem.f2().residual_shrink_into(&bx, gamma / lambda, &mut rv);
    let dual_res = dist_sq(&v, &rv).sqrt();

    primal + dual_res
}

/// Relative ℓ₂ error `‖x − reference‖ / ‖reference‖` (absolute when the
/// reference is zero).
pub fn relative_error(x: &[f64], reference: &[f64]) -> f64 {
    let d = dist_sq(x, reference).sqrt();
    let r = norm(reference);
    if r > 0.0 {
        d / r
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> FusedLassoSpec {
        FusedLassoSpec { r: 8, n: 30, mu1: 1.0, mu2: 0.5, noise_sigma: 0.01, sparsity: 2, seed }
    }

    #[test]
    fn zero_truth_and_noise_give_zero_observations() {
        let s = FusedLassoSpec { sparsity: 0, noise_sigma: 0.0, ..spec(3) };
        let d = synthesize_fused_lasso(&s).unwrap();
        assert!(d.target.iter().all(|&t| t == 0.0));
        assert!(d.x_true.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let a = synthesize_fused_lasso(&spec(11)).unwrap();
        let b = synthesize_fused_lasso(&spec(11)).unwrap();
        let c = synthesize_fused_lasso(&spec(12)).unwrap();
        assert_eq!(a.target, b.target);
        assert_eq!(a.x_true, b.x_true);
        assert_eq!(a.a.apply(&a.x_true).unwrap(), b.a.apply(&b.x_true).unwrap());
        assert_ne!(a.target, c.target);
    }

    #[test]
    fn block_structure() {
        let d = synthesize_fused_lasso(&FusedLassoSpec { n: 200, sparsity: 4, ..spec(5) }).unwrap();
        let nnz = d.x_true.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nnz, 4 * fused_block_len(200, 4));
        assert!(d.x_true.iter().all(|v| *v == 0.0 || (1.0..2.0).contains(&v.abs())));
    }

    #[test]
    fn invalid_specs() {
        assert!(synthesize_fused_lasso(&FusedLassoSpec { n: 1, ..spec(1) }).is_err());
        assert!(synthesize_fused_lasso(&FusedLassoSpec { r: 0, ..spec(1) }).is_err());
        assert!(synthesize_fused_lasso(&FusedLassoSpec { mu1: -1.0, ..spec(1) }).is_err());
    }

    #[test]
    fn objective_at_zero_is_half_data_norm() {
        let d = synthesize_fused_lasso(&spec(2)).unwrap();
        let p = build_fused_lasso(d.a, d.target.clone(), 1.0, 0.5).unwrap();
        let expect = 0.5 * d.target.iter().map(|t| t * t).sum::<f64>();
        assert!((objective(&p, &vec![0.0; 30]) - expect).abs() < 1e-12);
        assert!(kkt_residual(&p, &vec![0.0; 30], &vec![0.0; 29]) > 0.0);
    }

    #[test]
    fn build_checks_dimensions() {
        let a = LinearMap::identity(3).unwrap();
        assert!(build_fused_lasso(a.clone(), vec![1.0; 2], 1.0, 1.0).is_err());
        assert!(build_tv_restoration(a, vec![1.0; 3], 2, 2, 1.0, true).is_err());
    }

    #[test]
    fn infeasible_objective_is_infinite() {
        let a = LinearMap::identity(4).unwrap();
        let p = build_tv_restoration(a, vec![1.0; 4], 2, 2, 0.1, true).unwrap();
        assert_eq!(objective(&p, &[1.0, -0.5, 0.0, 0.0]), f64::INFINITY);
        assert_eq!(feasibility_violation(&p, &[1.0, -0.5, 0.0, 0.0]), 0.5);
        assert!(projected_objective(&p, &[1.0, -0.5, 0.0, 0.0]).is_finite());
    }

    #[test]
    fn kernels() {
        let g = Kernel::gaussian(5, 1.0).unwrap();
        assert!((g.data.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(g.data[12] > g.data[0]);
        let b = Kernel::box_blur(3).unwrap();
        assert_eq!(b.data.len(), 9);
        assert!(Kernel::gaussian(0, 1.0).is_err());
    }

    #[test]
    fn checkerboard_layout() {
        let c = checkerboard(8, 8);
        assert_eq!(c[0], 1.0);
        assert_eq!(c[2], 0.0);
        assert_eq!(c[2 * 8], 0.0);
        assert_eq!(c.iter().sum::<f64>(), 32.0);
    }

    #[test]
    fn tv_synthesis() {
        let spec = TvRestorationSpec {
            height: 8,
            width: 8,
            kernel: Kernel::box_blur(3).unwrap(),
            mu: 0.1,
            noise_sigma: 0.0,
            nonneg: true,
            seed: 1,
        };
        let d = synthesize_tv_restoration(&spec).unwrap();
        assert_eq!(d.target.len(), 64);
        // blur preserves the mean under periodic boundaries
        let mean_in: f64 = d.x_true.iter().sum();
        let mean_out: f64 = d.target.iter().sum();
        assert!((mean_in - mean_out).abs() < 1e-12);
    }
}
