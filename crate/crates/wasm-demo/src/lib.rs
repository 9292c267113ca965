//! Browser bindings for three small interactive views:
//!
//! - [`cone_region`]: the three cone margins of `diag(h₁, h₂, h₃)` against a
//!   diagonal `A` over a square of `(h₁, h₂)`.
//! - [`convexity_curve`]: slacks of `tr A/(6 det A)` and `1/det A` along a
//!   segment between two random positive definite matrices.
//! - [`solve_surface`]: a continuity solve on a small ℂ² torus, returned as
//!   the `x₁y₁` slice of the potential.
//!
//! Each has a plain Rust form (tested natively) and a camel-case export
//! returning a `Float64Array`. Seeds are `u32` on the JavaScript side.

use gma_core::forms::{cone_margins, convexity_probe};
use gma_core::grid::band_limited_random;
use gma_core::random::random_pd;
use gma_core::solver::continuity_solve;
use gma_core::{ContinuitySettings, Forcing, GridSpec, HermForm, ProblemSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Margins `(λ_min H, det H − tr(AH), λ_min(adj H − A))` on a `res × res`
/// grid of `h₁, h₂ ∈ (0, extent]` with `h₃` fixed, row-major in `h₂`,
/// three values per cell.
pub fn cone_region(a_diag: &[f64], h3: f64, extent: f64, res: usize) -> Result<Vec<f64>, String> {
    if a_diag.len() != 3 || a_diag.iter().any(|v| !v.is_finite()) {
        return Err(msg("A needs three finite diagonal entries"));
    }
    if res == 0 || !(extent > 0.0) || !h3.is_finite() {
        return Err(msg("need res > 0, extent > 0 and finite h3"));
    }
    let a = HermForm::diag(a_diag);
    let step = extent / res as f64;
    let mut out = Vec::with_capacity(3 * res * res);
    for j in 0..res {
        let h2 = (j as f64 + 0.5) * step;
        for i in 0..res {
            let h1 = (i as f64 + 0.5) * step;
            let m = cone_margins(&HermForm::diag(&[h1, h2, h3]), &a);
            out.extend([m.lambda_min_h, m.residual_margin, m.lambda_min_l]);
        }
    }
    Ok(out)
}

/// `(t, F slack, G slack)` at `samples` points of `[0, 1]` for two random
/// positive definite 3×3 matrices drawn from `seed`. Both slacks are ≤ 0 by
/// convexity.
pub fn convexity_curve(seed: u64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err(msg("need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = random_pd(&mut rng, 3, 0.1, 10.0);
    let a2 = random_pd(&mut rng, 3, 0.1, 10.0);
    let mut out = Vec::with_capacity(3 * samples);
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let (f, g) = convexity_probe(&a1, &a2, t).map_err(msg)?;
        out.extend([t, f, g]);
    }
    Ok(out)
}

/// Solves `(ω + ddc φ)² = c·e^F` on a `size⁴` torus with a band-limited
/// random `F` of sup-norm `amplitude`. Returns
/// `[residual, newton iterations, continuity steps, sup φ, slice…]` where
/// the slice is `φ` on the `x₁y₁` plane, row-major in `x₁`.
pub fn solve_surface(size: usize, amplitude: f64, seed: u64) -> Result<Vec<f64>, String> {
    if !(4..=24).contains(&size) || size % 2 != 0 {
        return Err(msg("size must be even and between 4 and 24"));
    }
    if !(0.0..=2.0).contains(&amplitude) {
        return Err(msg("amplitude must lie in [0, 2]"));
    }
    let grid = GridSpec::new(2, vec![size; 4]).map_err(msg)?;
    let max_mode = (size / 2 - 1).min(2);
    let f = band_limited_random(&grid, seed, max_mode, amplitude).map_err(msg)?;
    let spec = ProblemSpec::new(HermForm::identity(2), HermForm::zeros(2), Forcing::Driving(f), 0.0).map_err(msg)?;
    let res = continuity_solve(&spec, &ContinuitySettings::default()).map_err(msg)?;
    let phi = &res.phi;
    let mut out = vec![res.final_residual, res.newton_iterations as f64, res.t_path.len() as f64, phi.sup_norm()];
    let mut idx = [0usize; 4];
    for i in 0..size {
        for j in 0..size {
            idx[0] = i;
            idx[2] = j;
            out.push(phi.values()[grid.flat_index(&idx)]);
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = coneRegion)]
pub fn cone_region_js(a_diag: &[f64], h3: f64, extent: f64, res: usize) -> Result<Vec<f64>, JsError> {
    to_js(cone_region(a_diag, h3, extent, res))
}

#[wasm_bindgen(js_name = convexityCurve)]
pub fn convexity_curve_js(seed: u32, samples: usize) -> Result<Vec<f64>, JsError> {
    to_js(convexity_curve(seed.into(), samples))
}

#[wasm_bindgen(js_name = solveSurface)]
pub fn solve_surface_js(size: usize, amplitude: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    to_js(solve_surface(size, amplitude, seed.into()))
}
