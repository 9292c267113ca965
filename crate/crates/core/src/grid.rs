//! Periodic grids over the unit-lattice torus `[0,1)^{2n}` and exact spectral
//! calculus for band-limited fields.
//!
//! Axis order is `(x₁,…,x_n, y₁,…,y_n)` with `z_k = x_k + i y_k`; samples are
//! stored row-major over that order (the last axis is contiguous). The
//! complex Hessian `φ_{kl̄} = ∂²φ/∂z_k∂z̄_l` is applied as a Fourier
//! multiplier built from the real second-derivative symbols
//! `−(2π)² m_a m_b`. For a Nyquist index the pure second derivative keeps its
//! symbol and mixed derivatives involving that axis vanish, which is exactly
//! the derivative of the real trigonometric interpolant sampled on the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::herm::{HermForm, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    sizes: Vec<usize>,
}

impl GridSpec {
    pub fn new(n: usize, sizes: Vec<usize>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(GmaError::invalid(format!("complex dimension must be 2 or 3, got {n}")));
        }
        if sizes.len() != 2 * n {
            return Err(GmaError::invalid(format!("expected {} axis sizes, got {}", 2 * n, sizes.len())));
        }
        if let Some(bad) = sizes.iter().find(|&&s| s < 2 || s % 2 != 0) {
            return Err(GmaError::invalid(format!("axis sizes must be even and at least 2, got {bad}")));
        }
        Ok(Self { n, sizes })
    }

    pub fn uniform(n: usize, size: usize) -> Result<Self> {
        Self::new(n, vec![size; 2 * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_name(&self, axis: usize) -> String {
        if axis < self.n {
            format!("x{}", axis + 1)
        } else {
            format!("y{}", axis - self.n + 1)
        }
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims()];
        for a in (0..self.dims().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.sizes[a + 1];
        }
        s
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut p: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            idx[a] = p % self.sizes[a];
            p /= self.sizes[a];
        }
        idx
    }

    /// Calls `f(p, idx)` for every flat position in order, without
    /// allocating per point.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut idx = vec![0; self.dims()];
        for p in 0..self.len() {
            f(p, &idx);
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < self.sizes[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Coordinates in `[0,1)` of a flat position, in axis order.
    pub fn coords(&self, p: usize) -> Vec<f64> {
        self.multi_index(p).iter().zip(&self.sizes).map(|(&i, &n)| i as f64 / n as f64).collect()
    }

    /// Signed wave number of index `i` on an axis of size `n`; the Nyquist
    /// index maps to `−n/2`.
    pub fn wave_number(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }
}

/// Real samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GmaError::invalid(format!("field has {} samples, grid has {}", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GmaError::invalid("field contains non-finite samples"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every grid point; `f` receives coordinates in axis order.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| f(&grid.coords(p))).collect();
        Self { grid: grid.clone(), values }
    }

    /// Like [`ScalarField::from_fn`] but with integer multi-indices.
    pub fn from_fn_indexed(grid: &GridSpec, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        grid.for_each_index(|_, idx| values.push(f(idx)));
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Integral over the unit-volume fundamental domain.
    pub fn integrate_density(&self) -> f64 {
        self.mean()
    }

    pub fn project_mean_zero(&self) -> ScalarField {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &ScalarField) -> f64 {
        self.zip_map(other, |a, b| a - b).sup_norm()
    }

    /// Cyclic translation by whole grid steps: `out(i) = self(i − shift)`.
    pub fn shifted(&self, shift: &[isize]) -> ScalarField {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for (p, &v) in self.values.iter().enumerate() {
            let idx: Vec<usize> = g
                .multi_index(p)
                .iter()
                .zip(g.sizes())
                .zip(shift)
                .map(|((&i, &n), &s)| (i as isize + s).rem_euclid(n as isize) as usize)
                .collect();
            out[g.flat_index(&idx)] = v;
        }
        Self { grid: g.clone(), values: out }
    }
}

/// One Hermitian `n×n` matrix per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianField {
    grid: GridSpec,
    values: Vec<HermForm>,
}

impl HermitianField {
    pub fn new(grid: GridSpec, values: Vec<HermForm>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GmaError::invalid("sample count does not match grid"));
        }
        if values.iter().any(|h| h.n() != grid.n()) {
            return Err(GmaError::invalid("matrix dimension does not match grid"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &GridSpec, h: HermForm) -> Self {
        Self { grid: grid.clone(), values: vec![h; grid.len()] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[HermForm] {
        &self.values
    }

    pub fn get(&self, p: usize) -> &HermForm {
        &self.values[p]
    }

    /// Pointwise `c + self`.
    pub fn offset(&self, c: &HermForm) -> HermitianField {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|h| *c + *h).collect() }
    }

    /// Grid mean of the matrix field.
    pub fn mean(&self) -> HermForm {
        let n = self.grid.n();
        let len = self.values.len() as f64;
        HermForm::from_upper_fn(n, |i, j| {
            let s: C64 = self.values.iter().map(|h| h.get(i, j)).sum();
            s / len
        })
    }

    /// Pointwise `tr(K · H(x))`.
    pub fn trace_with(&self, k: &HermForm) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid.clone(), self.values.iter().map(|h| k.trace_product(h)).collect())
    }

    pub fn map_scalar(&self, f: impl Fn(&HermForm) -> f64) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid.clone(), self.values.iter().map(f).collect())
    }
}

/// Entries of a complex Hessian as separate component fields.
pub struct HessianComponents {
    /// Real diagonal entries `φ_{kk̄}`.
    pub diag: Vec<Vec<f64>>,
    /// Upper off-diagonal entries `φ_{kl̄}`, `k < l`, in the order of
    /// [`Spectral::off_diagonal_pairs`].
    pub off: Vec<Vec<C64>>,
}

impl HessianComponents {
    pub fn at(&self, n: usize, p: usize) -> HermForm {
        let mut h = HermForm::zeros(n);
        for k in 0..n {
            h.set(k, k, C64::new(self.diag[k][p], 0.0));
        }
        for (idx, (k, l)) in off_pairs(n).enumerate() {
            h.set(k, l, self.off[idx][p]);
        }
        h
    }

    /// Pointwise `tr(L(x) · Hess(x))` accumulated into `out`.
    pub fn trace_against(&self, l: &[HermForm], out: &mut [f64]) {
        let n = self.diag.len();
        for (p, o) in out.iter_mut().enumerate() {
            let lp = &l[p];
            let mut s = 0.0;
            for k in 0..n {
                s += lp.get(k, k).re * self.diag[k][p];
            }
            for (idx, (k, q)) in off_pairs(n).enumerate() {
                // L_qk H_kq + L_kq H_qk = 2 Re(L_qk H_kq)
                s += 2.0 * (lp.get(q, k) * self.off[idx][p]).re;
            }
            *o = s;
        }
    }
}

fn off_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |k| (k + 1..n).map(move |l| (k, l)))
}

/// FFT plans and Fourier multipliers for one grid.
pub struct Spectral {
    grid: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Real symbols of the diagonal entries `∂_{z_k}∂_{z̄_k}`.
    diag_symbols: Vec<Vec<f64>>,
    /// Complex symbols of `∂_{z_k}∂_{z̄_l}` for `k < l`.
    off_symbols: Vec<Vec<C64>>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let forward = grid.sizes().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.sizes().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let n = grid.n();
        let len = grid.len();
        let mut diag_symbols = vec![vec![0.0; len]; n];
        let mut off_symbols = vec![vec![ZERO; len]; n * (n - 1) / 2];
        let sizes = grid.sizes();
        let two_pi_sq = (2.0 * PI) * (2.0 * PI);
        let mut m = vec![0.0; 2 * n];
        let mut nyq = vec![false; 2 * n];
        grid.for_each_index(|p, idx| {
            for (a, &i) in idx.iter().enumerate() {
                m[a] = GridSpec::wave_number(i, sizes[a]) as f64;
                nyq[a] = i == sizes[a] / 2;
            }
            // real second-derivative symbol
            let s = |a: usize, b: usize| -> f64 {
                if a != b && (nyq[a] || nyq[b]) {
                    0.0
                } else {
                    -two_pi_sq * m[a] * m[b]
                }
            };
            for k in 0..n {
                diag_symbols[k][p] = 0.25 * (s(k, k) + s(n + k, n + k));
            }
            for (j, (k, l)) in off_pairs(n).enumerate() {
                off_symbols[j][p] = C64::new(0.25 * (s(k, l) + s(n + k, n + l)), 0.25 * (s(k, n + l) - s(n + k, l)));
            }
        });
        Self { grid: grid.clone(), forward, inverse, diag_symbols, off_symbols }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn off_diagonal_pairs(&self) -> Vec<(usize, usize)> {
        off_pairs(self.grid.n()).collect()
    }

    /// Batched FFT along the contiguous axis, then a transpose that rotates
    /// the next axis into contiguous position. After all axes the layout is
    /// back in the original order (size-1 axes rotate trivially).
    fn transform(&self, data: &mut Vec<C64>, inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let sizes = self.grid.sizes();
        let total = data.len();
        let max_scratch = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![ZERO; max_scratch];
        let mut buf = vec![ZERO; total];
        for (axis, plan) in plans.iter().enumerate().rev() {
            let len = sizes[axis];
            if len == 1 {
                continue;
            }
            plan.process_with_scratch(data, &mut scratch[..plan.get_inplace_scratch_len()]);
            transpose(data, &mut buf, total / len, len);
            std::mem::swap(data, &mut buf);
        }
    }

    /// Fourier coefficients (normalised so that coefficient 0 is the mean).
    pub fn forward(&self, values: &[f64]) -> Vec<C64> {
        let mut data: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        let inv = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= inv;
        }
        data
    }

    /// Inverse transform of normalised coefficients.
    pub fn inverse(&self, mut coeffs: Vec<C64>) -> Vec<C64> {
        self.transform(&mut coeffs, true);
        coeffs
    }

    pub fn inverse_real(&self, coeffs: Vec<C64>) -> Vec<f64> {
        self.inverse(coeffs).into_iter().map(|z| z.re).collect()
    }

    /// Complex Hessian components of the field with coefficients `hat`.
    pub fn hessian_components(&self, hat: &[C64]) -> HessianComponents {
        let n = self.grid.n();
        let mut diag = Vec::with_capacity(n);
        // two real diagonal entries per complex transform
        let mut k = 0;
        while k < n {
            let second = (k + 1 < n).then_some(k + 1);
            let buf: Vec<C64> = hat
                .iter()
                .enumerate()
                .map(|(p, &c)| {
                    let im = second.map_or(0.0, |q| self.diag_symbols[q][p]);
                    c * C64::new(self.diag_symbols[k][p], im)
                })
                .collect();
            let out = self.inverse(buf);
            diag.push(out.iter().map(|z| z.re).collect());
            if second.is_some() {
                diag.push(out.iter().map(|z| z.im).collect());
            }
            k += 2;
        }
        let off = self
            .off_symbols
            .iter()
            .map(|sym| {
                let buf: Vec<C64> = hat.iter().zip(sym).map(|(&c, &s)| c * s).collect();
                self.inverse(buf)
            })
            .collect();
        HessianComponents { diag, off }
    }

    pub fn complex_hessian(&self, phi: &ScalarField) -> HermitianField {
        assert_eq!(phi.grid(), &self.grid, "grid mismatch");
        let comps = self.hessian_components(&self.forward(phi.values()));
        let n = self.grid.n();
        let values = (0..self.grid.len()).map(|p| comps.at(n, p)).collect();
        HermitianField { grid: self.grid.clone(), values }
    }

    /// Symbol of `δ ↦ tr(K · Hess δ)` at every mode.
    pub fn constant_coeff_symbol(&self, k: &HermForm) -> Vec<f64> {
        let n = self.grid.n();
        let pairs: Vec<_> = off_pairs(n).collect();
        (0..self.grid.len())
            .map(|p| {
                let mut s = 0.0;
                for q in 0..n {
                    s += k.get(q, q).re * self.diag_symbols[q][p];
                }
                for (idx, &(a, b)) in pairs.iter().enumerate() {
                    s += 2.0 * (k.get(b, a) * self.off_symbols[idx][p]).re;
                }
                s
            })
            .collect()
    }

    /// `tr(K · Hess δ)` for constant `K`.
    pub fn constant_coeff_apply(&self, k: &HermForm, delta: &[f64]) -> Vec<f64> {
        let sym = self.constant_coeff_symbol(k);
        self.apply_symbol(&sym, delta)
    }

    pub fn apply_symbol(&self, sym: &[f64], values: &[f64]) -> Vec<f64> {
        let hat = self.forward(values);
        self.inverse_real(hat.iter().zip(sym).map(|(&c, &s)| c * s).collect())
    }

    /// Divides by a precomputed symbol on all modes where it is nonzero;
    /// returns the solution and the magnitude of the dropped mode-zero
    /// component of `rhs`.
    pub fn solve_symbol(&self, sym: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
        let mut hat = self.forward(rhs);
        let dropped = hat[0].norm();
        for (c, &s) in hat.iter_mut().zip(sym) {
            *c = if s != 0.0 { *c / s } else { ZERO };
        }
        (self.inverse_real(hat), dropped)
    }
}

/// `out[c·rows + r] = data[r·cols + c]`.
fn transpose(data: &[C64], out: &mut [C64], rows: usize, cols: usize) {
    for (r, row) in data.chunks_exact(cols).enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[c * rows + r] = v;
        }
    }
}

/// Complex Hessian `φ_{kl̄}` by spectral differentiation.
pub fn complex_hessian(phi: &ScalarField) -> HermitianField {
    Spectral::new(phi.grid()).complex_hessian(phi)
}

pub fn integrate_density(f: &ScalarField) -> f64 {
    f.integrate_density()
}

pub fn project_mean_zero(phi: &ScalarField) -> ScalarField {
    phi.project_mean_zero()
}

/// Tolerance above which the dropped mean of a right-hand side is reported.
pub const MODE_ZERO_TOL: f64 = 1e-10;

/// Mean-zero `δ` with `tr(K · Hess δ) = r`. The mean of `r` is projected
/// out (and reported on stderr when it exceeds [`MODE_ZERO_TOL`]).
pub fn constant_coeff_solve(k: &HermForm, r: &ScalarField) -> Result<ScalarField> {
    if k.n() != r.grid().n() {
        return Err(GmaError::invalid("coefficient dimension does not match grid"));
    }
    if !k.is_positive_definite() {
        return Err(GmaError::invalid("constant coefficient must be positive definite"));
    }
    let spec = Spectral::new(r.grid());
    let sym = spec.constant_coeff_symbol(k);
    let (delta, dropped) = spec.solve_symbol(&sym, r.values());
    if dropped > MODE_ZERO_TOL * (1.0 + r.sup_norm()) {
        eprintln!("warning: constant_coeff_solve dropped a mean component of {dropped:.3e}");
    }
    Ok(ScalarField::from_vec_unchecked(r.grid().clone(), delta))
}

/// Deterministic mean-zero real field supported on modes with
/// `max_a |m_a| ≤ max_mode`, scaled to sup-norm `amplitude`.
pub fn band_limited_random(grid: &GridSpec, seed: u64, max_mode: usize, amplitude: f64) -> Result<ScalarField> {
    let limit = grid.sizes().iter().min().copied().unwrap_or(2) / 2;
    if max_mode + 1 > limit {
        return Err(GmaError::invalid(format!("max_mode {max_mode} exceeds grid limit {}", limit as i64 - 1)));
    }
    band_limited_random_axes(grid, seed, &vec![max_mode; grid.dims()], amplitude)
}

/// Like [`band_limited_random`] with a separate mode bound per axis
/// (0 makes the field constant along that axis).
pub fn band_limited_random_axes(
    grid: &GridSpec,
    seed: u64,
    max_modes: &[usize],
    amplitude: f64,
) -> Result<ScalarField> {
    if max_modes.len() != grid.dims() {
        return Err(GmaError::invalid("one mode bound per axis required"));
    }
    for (&m, &n) in max_modes.iter().zip(grid.sizes()) {
        if 2 * m >= n {
            return Err(GmaError::invalid(format!("mode bound {m} not below Nyquist for axis size {n}")));
        }
    }
    if amplitude == 0.0 {
        return Ok(ScalarField::zeros(grid));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = grid.sizes();
    let mut hat = vec![ZERO; grid.len()];
    let mut m = vec![0i64; grid.dims()];
    grid.for_each_index(|p, idx| {
        for (a, (&i, &n)) in idx.iter().zip(sizes).enumerate() {
            m[a] = GridSpec::wave_number(i, n);
        }
        if m.iter().zip(max_modes).any(|(&w, &b)| w.unsigned_abs() as usize > b) {
            return;
        }
        // canonical representative of each ±m pair: first nonzero entry positive
        match m.iter().find(|&&w| w != 0) {
            Some(&w) if w > 0 => {
                let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let neg: Vec<usize> = idx.iter().zip(sizes).map(|(&i, &n)| (n - i) % n).collect();
                hat[p] = c;
                hat[grid.flat_index(&neg)] = c.conj();
            }
            _ => {}
        }
    });
    let spec = Spectral::new(grid);
    let mut values = spec.inverse_real(hat);
    let sup = sup_norm(&values);
    if sup > 0.0 {
        for v in values.iter_mut() {
            *v *= amplitude / sup;
        }
    }
    Ok(ScalarField::from_vec_unchecked(grid.clone(), values))
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Pairwise summation; deterministic and accurate to `O(ε log N)`.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, vec![8; 5]).is_err());
        assert!(GridSpec::new(2, vec![8, 8, 7, 8]).is_err());
        assert!(GridSpec::new(4, vec![8; 8]).is_err());
        let g = GridSpec::new(2, vec![4, 6, 2, 8]).unwrap();
        assert_eq!(g.len(), 4 * 6 * 2 * 8);
        for p in [0, 17, 200, g.len() - 1] {
            assert_eq!(g.flat_index(&g.multi_index(p)), p);
        }
    }

    #[test]
    fn hessian_of_constant_is_zero() {
        let g = GridSpec::uniform(2, 6).unwrap();
        let h = complex_hessian(&ScalarField::constant(&g, 3.5));
        assert!(h.values().iter().all(|m| m.max_abs() < 1e-13));
    }

    #[test]
    fn hessian_of_single_cosine() {
        let g = GridSpec::uniform(3, 4).unwrap();
        let phi = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos());
        let h = complex_hessian(&phi);
        for (p, m) in h.values().iter().enumerate() {
            let x = g.coords(p);
            let want = -PI * PI * (2.0 * PI * x[0]).cos();
            assert!(close(m.get(0, 0).re, want, 1e-12));
            let mut rest = *m;
            rest.set(0, 0, C64::new(0.0, 0.0));
            assert!(rest.max_abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_of_mixed_mode() {
        // φ = cos(2π(x₁ + y₂)): φ_{12̄} = (1/4)(i D_{x1 y2}) = −iπ² cos(·)
        let g = GridSpec::uniform(3, 4).unwrap();
        let phi = ScalarField::from_fn(&g, |x| (2.0 * PI * (x[0] + x[4])).cos());
        let h = complex_hessian(&phi);
        for (p, m) in h.values().iter().enumerate() {
            let x = g.coords(p);
            let c = (2.0 * PI * (x[0] + x[4])).cos();
            assert!(close(m.get(0, 0).re, -PI * PI * c, 1e-12));
            assert!(close(m.get(1, 1).re, -PI * PI * c, 1e-12));
            assert!((m.get(0, 1) - C64::new(0.0, -PI * PI * c)).norm() < 1e-12);
            assert!(m.get(0, 2).norm() < 1e-12 && m.get(2, 2).re.abs() < 1e-12);
        }
    }

    #[test]
    fn integration_and_projection() {
        let g = GridSpec::uniform(2, 8).unwrap();
        assert!(close(ScalarField::constant(&g, 2.5).integrate_density(), 2.5, 1e-15));
        let c = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos());
        assert!(c.integrate_density().abs() < 1e-15);
        // cos²(2πx₁) integrates to 1/2
        let c2 = c.zip_map(&c, |a, b| a * b);
        assert!(close(c2.integrate_density(), 0.5, 1e-15));
        let shifted = c.map(|v| v + 1.0).project_mean_zero();
        assert!(shifted.distance(&c) < 1e-15);
        assert!(ScalarField::constant(&g, 5.0).project_mean_zero().sup_norm() < 1e-15);
    }

    #[test]
    fn constant_coeff_solve_single_mode() {
        // tr(Id · Hess) = Δ/4; on cos(2πx₁) that is −π²
        let g = GridSpec::uniform(2, 8).unwrap();
        let r = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos());
        let d = constant_coeff_solve(&HermForm::identity(2), &r).unwrap();
        let want = r.scale(-1.0 / (PI * PI));
        assert!(d.distance(&want) < 1e-14);
        let zero = constant_coeff_solve(&HermForm::identity(2), &ScalarField::zeros(&g)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        assert!(constant_coeff_solve(&HermForm::diag(&[1.0, -1.0]), &r).is_err());
    }

    #[test]
    fn band_limited_random_properties() {
        let g = GridSpec::uniform(2, 8).unwrap();
        let z = band_limited_random(&g, 1, 2, 0.0).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let a = band_limited_random(&g, 7, 2, 0.3).unwrap();
        let b = band_limited_random(&g, 7, 2, 0.3).unwrap();
        assert_eq!(a, b);
        assert!(close(a.sup_norm(), 0.3, 1e-15));
        assert!(a.mean().abs() < 1e-15);
        let spec = Spectral::new(&g);
        let hat = spec.forward(a.values());
        for (p, c) in hat.iter().enumerate() {
            let m = g.multi_index(p);
            let high = m.iter().any(|&i| GridSpec::wave_number(i, 8).abs() > 2);
            if high {
                assert!(c.norm() < 1e-15);
            }
        }
        assert!(band_limited_random(&g, 7, 4, 0.3).is_err());
    }

    #[test]
    fn shift_is_cyclic() {
        let g = GridSpec::new(2, vec![4, 2, 2, 2]).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let s = f.shifted(&[1, 0, 0, 0]);
        assert_eq!(s.values()[g.flat_index(&[1, 0, 0, 0])], 0.0);
        assert_eq!(s.values()[g.flat_index(&[0, 0, 0, 0])], 0.75);
    }
}
