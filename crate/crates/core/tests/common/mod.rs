#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use pdfp_core::problems::{
    build_fused_lasso, build_tv_restoration, synthesize_fused_lasso, synthesize_tv_restoration,
    FusedLassoSpec, Kernel, SyntheticData, TvRestorationSpec,
};
use pdfp_core::{LinearMap, Problem, ProxFn, SmoothFn};

pub fn fused_spec(r: usize, n: usize, mu1: f64, mu2: f64, seed: u64) -> FusedLassoSpec {
    FusedLassoSpec { r, n, mu1, mu2, noise_sigma: 0.01, sparsity: 4, seed }
}

/// The desk-scale fused LASSO instance (r = 50, n = 200).
pub fn desk_fused_lasso() -> (Problem, SyntheticData) {
    let data = synthesize_fused_lasso(&fused_spec(50, 200, 20.0, 2.0, 7)).unwrap();
    let p = build_fused_lasso(data.a.clone(), data.target.clone(), 20.0, 2.0).unwrap();
    (p, data)
}

/// `A = I`, `a = [1, 3]`, `μ₁ = μ₂ = 0.5`; the minimizer is `(1, 2)`.
pub fn tiny_fused_lasso() -> Problem {
    build_fused_lasso(LinearMap::identity(2).unwrap(), vec![1.0, 3.0], 0.5, 0.5).unwrap()
}

pub fn tv_spec(nonneg: bool) -> TvRestorationSpec {
    TvRestorationSpec {
        height: 16,
        width: 16,
        kernel: Kernel::gaussian(5, 1.0).unwrap(),
        mu: 0.05,
        noise_sigma: 0.01,
        nonneg,
        seed: 0,
    }
}

/// 16×16 blurred noisy checkerboard with TV weight 0.05.
pub fn tv_instance(nonneg: bool) -> Problem {
    let spec = tv_spec(nonneg);
    let data = synthesize_tv_restoration(&spec).unwrap();
    build_tv_restoration(data.a, data.target, 16, 16, spec.mu, nonneg).unwrap()
}

/// Dense copy of a linear map, column by column.
pub fn to_dense(map: &LinearMap) -> DMatrix<f64> {
    let (m, n) = (map.out_dim(), map.in_dim());
    let mut out = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = map.apply(&e).unwrap();
        e[j] = 0.0;
        for i in 0..m {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// Largest eigenvalue of `MMᵀ` by a dense symmetric eigensolver.
pub fn dense_lambda_max(m: &DMatrix<f64>) -> f64 {
    let g = m * m.transpose();
    g.symmetric_eigen().eigenvalues.max()
}

pub fn dense_lambda_min(g: &DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigen().eigenvalues.min()
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn ridge_quadratic_problem(a: LinearMap, target: Vec<f64>, ridge: f64, w: f64, b: LinearMap) -> Problem {
    let f1 = SmoothFn::ridge_least_squares(a, target, ridge).unwrap();
    Problem::new(f1, ProxFn::quadratic(w).unwrap(), b, ProxFn::Zero).unwrap()
}
