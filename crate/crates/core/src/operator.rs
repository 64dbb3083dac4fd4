//! Linear maps `B: R^n -> R^m` with their adjoints, plus a power-method
//! estimate of `λmax(B Bᵀ)` used by the step-size rules.

use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::rng::SplitMix64;
use crate::vector::{dot, norm};

/// Structured linear operators used by the solvers.
///
/// Every map is immutable after construction; `apply` and `adjoint` are pure.
#[derive(Clone, Debug)]
pub enum LinearMap {
    /// Row-major `rows x cols` matrix.
    Dense {
        rows: usize,
        cols: usize,
        data: Arc<[f64]>,
    },
    /// `(Bx)_i = x_{i+1} - x_i`, mapping `R^n -> R^{n-1}`.
    FirstDifference { n: usize },
    /// Forward-difference image gradient on a row-major `height x width`
    /// image. Output is the horizontal channel followed by the vertical
    /// channel, each `height * width` long, zero in the last column / row.
    Grad2d { height: usize, width: usize },
    /// Periodic 2-D convolution with a row-major kernel whose centre is at
    /// `(kh / 2, kw / 2)`.
    Conv2dPeriodic {
        kernel: Arc<[f64]>,
        kh: usize,
        kw: usize,
        height: usize,
        width: usize,
    },
    Identity { n: usize },
    Zero { in_dim: usize, out_dim: usize },
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidParameter(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

impl LinearMap {
    pub fn first_difference(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "first difference needs n >= 2, got {n}"
            )));
        }
        Ok(Self::FirstDifference { n })
    }

    pub fn grad2d(height: usize, width: usize) -> Result<Self> {
        require_positive("height", height)?;
        require_positive("width", width)?;
        Ok(Self::Grad2d { height, width })
    }

    /// Dense map from a list of equal-length rows.
    pub fn dense(rows: &[Vec<f64>]) -> Result<Self> {
        require_positive("row count", rows.len())?;
        let cols = rows[0].len();
        require_positive("column count", cols)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len("dense row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self::Dense {
            rows: rows.len(),
            cols,
            data: data.into(),
        })
    }

    pub fn dense_from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        require_positive("row count", rows)?;
        require_positive("column count", cols)?;
        check_len("dense data", rows * cols, data.len())?;
        Ok(Self::Dense {
            rows,
            cols,
            data: data.into(),
        })
    }

    pub fn conv2d_periodic(
        kernel: Vec<f64>,
        kh: usize,
        kw: usize,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        require_positive("kernel height", kh)?;
        require_positive("kernel width", kw)?;
        require_positive("height", height)?;
        require_positive("width", width)?;
        check_len("convolution kernel", kh * kw, kernel.len())?;
        if kh > height || kw > width {
            return Err(Error::InvalidParameter(format!(
                "kernel {kh}x{kw} larger than image {height}x{width}"
            )));
        }
        Ok(Self::Conv2dPeriodic {
            kernel: kernel.into(),
            kh,
            kw,
            height,
            width,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        require_positive("n", n)?;
        Ok(Self::Identity { n })
    }

    /// Zero map `R^in_dim -> R^out_dim`.
    pub fn zero(in_dim: usize, out_dim: usize) -> Result<Self> {
        require_positive("in_dim", in_dim)?;
        require_positive("out_dim", out_dim)?;
        Ok(Self::Zero { in_dim, out_dim })
    }

    pub fn in_dim(&self) -> usize {
        match *self {
            Self::Dense { cols, .. } => cols,
            Self::FirstDifference { n } => n,
            Self::Grad2d { height, width } => height * width,
            Self::Conv2dPeriodic { height, width, .. } => height * width,
            Self::Identity { n } => n,
            Self::Zero { in_dim, .. } => in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            Self::Dense { rows, .. } => rows,
            Self::FirstDifference { n } => n - 1,
            Self::Grad2d { height, width } => 2 * height * width,
            Self::Conv2dPeriodic { height, width, .. } => height * width,
            Self::Identity { n } => n,
            Self::Zero { out_dim, .. } => out_dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Dense { .. } => "dense",
            Self::FirstDifference { .. } => "first_difference",
            Self::Grad2d { .. } => "grad2d",
            Self::Conv2dPeriodic { .. } => "conv2d_periodic",
            Self::Identity { .. } => "identity",
            Self::Zero { .. } => "zero",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero { .. })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("LinearMap::apply", self.in_dim(), x.len())?;
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("LinearMap::adjoint", self.out_dim(), y.len())?;
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }

    /// Unchecked forward application; `out` is overwritten.
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim());
        debug_assert_eq!(out.len(), self.out_dim());
        match self {
            Self::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact(*cols)) {
                    *o = dot(row, x);
                }
            }
            Self::FirstDifference { .. } => {
                for (o, w) in out.iter_mut().zip(x.windows(2)) {
                    *o = w[1] - w[0];
                }
            }
            &Self::Grad2d { height, width } => {
                let n = height * width;
                let (dh, dv) = out.split_at_mut(n);
                for i in 0..height {
                    for j in 0..width {
                        let k = i * width + j;
                        dh[k] = if j + 1 < width { x[k + 1] - x[k] } else { 0.0 };
                        dv[k] = if i + 1 < height {
                            x[k + width] - x[k]
                        } else {
                            0.0
                        };
                    }
                }
            }
            Self::Conv2dPeriodic {
                kernel,
                kh,
                kw,
                height,
                width,
            } => conv_periodic(kernel, *kh, *kw, *height, *width, x, out, false),
            Self::Identity { .. } => out.copy_from_slice(x),
            Self::Zero { .. } => out.fill(0.0),
        }
    }

    /// Unchecked adjoint application; `out` is overwritten.
    pub(crate) fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.out_dim());
        debug_assert_eq!(out.len(), self.in_dim());
        match self {
            Self::Dense { cols, data, .. } => {
                out.fill(0.0);
                for (yi, row) in y.iter().zip(data.chunks_exact(*cols)) {
                    if *yi != 0.0 {
                        for (o, a) in out.iter_mut().zip(row) {
                            *o += yi * a;
                        }
                    }
                }
            }
            &Self::FirstDifference { n } => {
                out[0] = -y[0];
                for i in 1..n - 1 {
                    out[i] = y[i - 1] - y[i];
                }
                out[n - 1] = y[n - 2];
            }
            &Self::Grad2d { height, width } => {
                let n = height * width;
                let (dh, dv) = y.split_at(n);
                for i in 0..height {
                    for j in 0..width {
                        let k = i * width + j;
                        let mut s = 0.0;
                        if j + 1 < width {
                            s -= dh[k];
                        }
                        if j > 0 {
                            s += dh[k - 1];
                        }
                        if i + 1 < height {
                            s -= dv[k];
                        }
                        if i > 0 {
                            s += dv[k - width];
                        }
                        out[k] = s;
                    }
                }
            }
            Self::Conv2dPeriodic {
                kernel,
                kh,
                kw,
                height,
                width,
            } => conv_periodic(kernel, *kh, *kw, *height, *width, y, out, true),
            Self::Identity { .. } => out.copy_from_slice(y),
            Self::Zero { .. } => out.fill(0.0),
        }
    }

    /// Power-iteration estimate of `λmax(B Bᵀ)` (equivalently `‖B‖²`).
    ///
    /// Iterates `v ↦ B(Bᵀv)` from a seeded pseudo-random unit vector and
    /// stops once the Rayleigh quotient changes by at most `tol` relative.
    pub fn op_norm_sq_estimate(&self, tol: f64, max_iter: usize, seed: u64) -> Result<OpNormEstimate> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        let m = self.out_dim();
        if self.is_zero() {
            return Ok(OpNormEstimate {
                value: 0.0,
                iterations_used: 0,
                converged: true,
            });
        }

        let mut rng = SplitMix64::new(seed);
        let mut v: Vec<f64> = (0..m).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|e| *e /= nv);

        let mut bt = vec![0.0; self.in_dim()];
        let mut w = vec![0.0; m];
        let mut rayleigh = 0.0;
        for it in 1..=max_iter {
            self.adjoint_into(&v, &mut bt);
            self.apply_into(&bt, &mut w);
            // ⟨v, B Bᵀ v⟩ = ‖Bᵀ v‖² for unit v.
            let next = dot(&bt, &bt);
            let nw = norm(&w);
            if nw == 0.0 {
                // v lies in ker(Bᵀ); restart is pointless for the zero map
                // and unlikely otherwise, so report what we have.
                return Ok(OpNormEstimate {
                    value: next,
                    iterations_used: it,
                    converged: true,
                });
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            let done = it > 1 && (next - rayleigh).abs() <= tol * next.abs();
            rayleigh = next;
            if done {
                return Ok(OpNormEstimate {
                    value: rayleigh,
                    iterations_used: it,
                    converged: true,
                });
            }
        }
        Ok(OpNormEstimate {
            value: rayleigh,
            iterations_used: max_iter,
            converged: false,
        })
    }

    /// Estimate with the default power-method settings.
    pub fn op_norm_sq(&self) -> Result<OpNormEstimate> {
        self.op_norm_sq_estimate(DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED)
    }
}

pub const DEFAULT_POWER_TOL: f64 = 1e-9;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;
pub const DEFAULT_POWER_SEED: u64 = 0x5EED;

#[allow(clippy::too_many_arguments)]
fn conv_periodic(
    kernel: &[f64],
    kh: usize,
    kw: usize,
    height: usize,
    width: usize,
    x: &[f64],
    out: &mut [f64],
    transpose: bool,
) {
    let (ch, cw) = (kh / 2, kw / 2);
    for i in 0..height {
        for j in 0..width {
            let mut s = 0.0;
            for a in 0..kh {
                for b in 0..kw {
                    // forward: x[i + a - ch, j + b - cw]; adjoint flips the offset
                    let (r, c) = if transpose {
                        ((i + height * 2 + ch - a) % height, (j + width * 2 + cw - b) % width)
                    } else {
                        ((i + height * 2 + a - ch) % height, (j + width * 2 + b - cw) % width)
                    };
                    s += kernel[a * kw + b] * x[r * width + c];
                }
            }
            out[i * width + j] = s;
        }
    }
}

/// Result of [`LinearMap::op_norm_sq_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpNormEstimate {
    /// Estimate of `λmax(B Bᵀ)`; approaches the true value from below.
    pub value: f64,
    pub iterations_used: usize,
    pub converged: bool,
}
