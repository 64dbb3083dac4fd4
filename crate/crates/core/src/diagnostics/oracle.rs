use crate::error::{Error, Result};
use crate::problems::objective;
use crate::solver::Problem;

#[derive(Clone, Debug, PartialEq)]
pub struct GridOracleResult {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimizes the objective over the lattice `{lo + k·step}ⁿ ∩ [lo, hi]ⁿ`
/// for primal dimension `n ≤ 3`, returning the lexicographically first
/// minimizer.
///
/// Every coordinate but the last is enumerated. Along the last coordinate
/// the objective restricted to equally spaced points of a line is a
/// discretely convex sequence, so its leftmost minimizer is located by
/// bisection on the sign of successive differences; lines containing
/// infinite values are scanned point by point. The result equals full
/// enumeration for any convex objective, at a cost of
/// `O(N^{n−1} log N)` evaluations instead of `O(Nⁿ)`.
pub fn grid_oracle(problem: &Problem, lo: f64, hi: f64, step: f64) -> Result<GridOracleResult> {
    let n = problem.primal_dim();
    if n > 3 {
        return Err(Error::InvalidParameter(format!(
            "grid oracle supports at most 3 variables, problem has {n}"
        )));
    }
    if !(lo < hi) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid needs lo < hi and step > 0, got [{lo}, {hi}] step {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let point = |k: usize| lo + k as f64 * step;

    let mut best = GridOracleResult {
        x: vec![f64::NAN; n],
        value: f64::INFINITY,
    };
    let mut x = vec![0.0; n];
    let outer = count.pow((n - 1) as u32);
    for idx in 0..outer {
        // most significant digit first, so idx order is lexicographic
        let mut rem = idx;
        for d in (0..n - 1).rev() {
            x[d] = point(rem % count);
            rem /= count;
        }
        let (k, value) = line_min(&mut x, n - 1, count, &point, problem);
        if value < best.value {
            x[n - 1] = point(k);
            best.x.copy_from_slice(&x);
            best.value = value;
        }
    }
    if best.value.is_infinite() {
        // everything infeasible: report the first grid point
        best.x = vec![lo; n];
    }
    Ok(best)
}

fn line_min(
    x: &mut [f64],
    axis: usize,
    count: usize,
    point: &impl Fn(usize) -> f64,
    problem: &Problem,
) -> (usize, f64) {
    let eval = |k: usize, x: &mut [f64]| {
        x[axis] = point(k);
        objective(problem, x)
    };
    // leftmost k with f(k+1) >= f(k)
    let (mut lo, mut hi) = (0usize, count - 1);
    let mut finite = true;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let (a, b) = (eval(mid, x), eval(mid + 1, x));
        if !a.is_finite() || !b.is_finite() {
            finite = false;
            break;
        }
        if b >= a {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if finite {
        return (lo, eval(lo, x));
    }
    let mut best = (0, f64::INFINITY);
    for k in 0..count {
        let v = eval(k, x);
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::LinearMap;
    use crate::prox::{ProxFn, SmoothFn};

    fn one_d(a: f64, l1: f64) -> Problem {
        let f1 = SmoothFn::least_squares(LinearMap::identity(1).unwrap(), vec![a]).unwrap();
        let f3 = if l1 > 0.0 { ProxFn::l1(l1).unwrap() } else { ProxFn::Zero };
        Problem::new(f1, ProxFn::Zero, LinearMap::identity(1).unwrap(), f3).unwrap()
    }

    #[test]
    fn pure_quadratic() {
        let r = grid_oracle(&one_d(2.0, 0.0), -5.0, 5.0, 1e-3).unwrap();
        assert!((r.x[0] - 2.0).abs() <= 1e-3);
    }

    #[test]
    fn one_d_lasso_soft_threshold() {
        let r = grid_oracle(&one_d(2.0, 1.0), -5.0, 5.0, 1e-3).unwrap();
        assert!((r.x[0] - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn matches_full_enumeration_in_two_d() {
        let a = LinearMap::dense(&[vec![1.0, 0.4], vec![0.2, -1.3], vec![0.7, 0.9]]).unwrap();
        let f1 = SmoothFn::least_squares(a, vec![1.0, -0.5, 2.0]).unwrap();
        let p = Problem::new(
            f1,
            ProxFn::l1(0.3).unwrap(),
            LinearMap::first_difference(2).unwrap(),
            ProxFn::IndicatorNonneg,
        )
        .unwrap();
        let step = 0.01;
        let r = grid_oracle(&p, -2.0, 2.0, step).unwrap();
        let mut brute = (vec![0.0; 2], f64::INFINITY);
        for i in 0..=400 {
            for j in 0..=400 {
                let x = vec![-2.0 + i as f64 * step, -2.0 + j as f64 * step];
                let v = objective(&p, &x);
                if v < brute.1 {
                    brute = (x, v);
                }
            }
        }
        assert_eq!(r.value, brute.1);
        assert_eq!(r.x, brute.0);
    }

    #[test]
    fn refuses_large_problems_and_bad_grids() {
        let f1 = SmoothFn::least_squares(LinearMap::identity(4).unwrap(), vec![0.0; 4]).unwrap();
        let p = Problem::new(f1, ProxFn::Zero, LinearMap::identity(4).unwrap(), ProxFn::Zero).unwrap();
        assert!(grid_oracle(&p, -1.0, 1.0, 0.1).is_err());
        assert!(grid_oracle(&one_d(1.0, 0.0), 1.0, -1.0, 0.1).is_err());
        assert!(grid_oracle(&one_d(1.0, 0.0), -1.0, 1.0, 0.0).is_err());
    }
}
