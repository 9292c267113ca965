//! Closed-form reference solution for separable problems.
//!
//! When `g` and `A` are diagonal and `F` depends on `(x₁, y₁)` only, the
//! solution depends on `(x₁, y₁)` only, its complex Hessian is
//! `diag(h, 0, …)` with `h = φ_{11̄} = (φ_xx + φ_yy)/4`, and the equation
//! collapses to the linear
//!
//! ```text
//! h·(g₂g₃ − a₁) = c·e^F·f₀ − f₀        (ℂ³)
//! h·g₂          = c·e^F·f₀ − f₀        (ℂ²)
//! ```
//!
//! solved here by a plain two-dimensional DFT, independent of the FFT code
//! used by the solver.

use std::f64::consts::PI;

use crate::error::{GmaError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::herm::{HermForm, C64};
use crate::solver::{rhs_at, ProblemSpec};

fn is_diagonal(h: &HermForm) -> bool {
    let n = h.n();
    (0..n).all(|i| (0..n).all(|j| i == j || h.get(i, j) == C64::new(0.0, 0.0)))
}

/// Samples of `f` on the `(x₁, y₁)` plane, after checking `f` is constant
/// along every other axis.
fn plane_values(f: &ScalarField) -> Result<(usize, usize, Vec<f64>)> {
    let grid = f.grid();
    let n = grid.n();
    let (nx, ny) = (grid.sizes()[0], grid.sizes()[n]);
    let mut plane = vec![0.0; nx * ny];
    let mut seen = vec![false; nx * ny];
    for (p, &v) in f.values().iter().enumerate() {
        let idx = grid.multi_index(p);
        let q = idx[0] * ny + idx[n];
        if !seen[q] {
            plane[q] = v;
            seen[q] = true;
        } else if (plane[q] - v).abs() > 1e-14 * (1.0 + v.abs()) {
            return Err(GmaError::invalid("forcing depends on axes other than x1, y1"));
        }
    }
    Ok((nx, ny, plane))
}

fn wave(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Mean-zero `u` on the periodic `(x, y)` plane with `u_xx + u_yy = r`.
pub fn poisson_2d(nx: usize, ny: usize, r: &[f64]) -> Vec<f64> {
    let mut hat = vec![C64::new(0.0, 0.0); nx * ny];
    for kx in 0..nx {
        for ky in 0..ny {
            let mut s = C64::new(0.0, 0.0);
            for ix in 0..nx {
                for iy in 0..ny {
                    let ang = -2.0 * PI * ((kx * ix) as f64 / nx as f64 + (ky * iy) as f64 / ny as f64);
                    s += r[ix * ny + iy] * C64::from_polar(1.0, ang);
                }
            }
            hat[kx * ny + ky] = s / (nx * ny) as f64;
        }
    }
    for kx in 0..nx {
        for ky in 0..ny {
            let q = kx * ny + ky;
            if kx == 0 && ky == 0 {
                hat[q] = C64::new(0.0, 0.0);
                continue;
            }
            let (mx, my) = (wave(kx, nx), wave(ky, ny));
            hat[q] /= -4.0 * PI * PI * (mx * mx + my * my);
        }
    }
    let mut out = vec![0.0; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            let mut s = C64::new(0.0, 0.0);
            for kx in 0..nx {
                for ky in 0..ny {
                    // Nyquist modes as real cosines
                    let ang = 2.0 * PI * ((kx * ix) as f64 / nx as f64 + (ky * iy) as f64 / ny as f64);
                    s += hat[kx * ny + ky] * C64::from_polar(1.0, ang);
                }
            }
            out[ix * ny + iy] = s.re;
        }
    }
    out
}

/// Reference solution of a separable problem at `t = 1`.
pub fn separable_oracle(spec: &ProblemSpec) -> Result<ScalarField> {
    if !is_diagonal(&spec.g) || !is_diagonal(&spec.a) {
        return Err(GmaError::invalid("the separable oracle needs diagonal g and A"));
    }
    let n = spec.n();
    let g = |i: usize| spec.g.get(i, i).re;
    let coef = if n == 3 { g(1) * g(2) - spec.a.get(0, 0).re } else { g(1) };
    if !(coef > 0.0) {
        return Err(GmaError::invalid("degenerate separable coefficient"));
    }
    let rhs = rhs_at(spec, 1.0)?;
    let f0 = crate::solver::base_density(spec)?;
    let (nx, ny, plane) = plane_values(&rhs)?;
    // u_xx + u_yy = 4h
    let r: Vec<f64> = plane.iter().map(|v| 4.0 * (v - f0) / coef).collect();
    let u = poisson_2d(nx, ny, &r);
    let grid: &GridSpec = spec.grid();
    Ok(ScalarField::from_fn_indexed(grid, |idx| u[idx[0] * ny + idx[n]]))
}
