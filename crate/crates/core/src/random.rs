//! Random Hermitian matrices for the property suites.

use rand::Rng;

use crate::herm::{HermForm, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Hermitian matrix with independent uniform entries in `[-scale, scale]`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> HermForm {
    HermForm::from_upper_fn(n, |i, j| {
        let re = rng.gen_range(-scale..scale);
        let im = if i == j { 0.0 } else { rng.gen_range(-scale..scale) };
        C64::new(re, im)
    })
}

/// Haar-distributed unitary matrix (Gram–Schmidt on complex Gaussian columns),
/// returned column-major as `u[col][row]`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect();
        for c in &cols {
            let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= proj * ci;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    cols
}

/// `U diag(spectrum) U*` for a random unitary `U`.
pub fn random_unitary_with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[f64]) -> HermForm {
    let n = spectrum.len();
    let u = random_unitary(rng, n);
    HermForm::from_upper_fn(n, |i, j| (0..n).map(|k| u[k][i] * u[k][j].conj() * spectrum[k]).sum())
}

/// Positive definite matrix with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> HermForm {
    let spectrum: Vec<f64> = (0..n).map(|_| log_uniform(rng, lo, hi)).collect();
    random_unitary_with_spectrum(rng, &spectrum)
}

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp()
}
