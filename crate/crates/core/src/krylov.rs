//! Restarted GMRES with right preconditioning for matrix-free real operators.

use crate::error::{GmaError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresSettings {
    /// Target for `‖b − A x‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iters: usize,
    pub restart: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 500, restart: 40 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with `x` as the initial guess, using `A M⁻¹ y = b`,
/// `x = M⁻¹ y`. Both operators write into their second argument.
pub fn gmres(
    mut apply_a: impl FnMut(&[f64], &mut [f64]),
    mut apply_prec: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    settings: &GmresSettings,
) -> Result<GmresStats> {
    let len = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresStats { iterations: 0, relative_residual: 0.0 });
    }
    let m = settings.restart.max(1);
    let mut work = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut r = vec![0.0; len];
    let mut total = 0;
    let mut rel;

    loop {
        apply_a(x, &mut work);
        for i in 0..len {
            r[i] = b[i] - work[i];
        }
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= settings.tol {
            return Ok(GmresStats { iterations: total, relative_residual: rel });
        }
        if total >= settings.max_iters {
            return Err(GmaError::LinearSolve { iterations: total, relative_residual: rel });
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, Givens rotations, rotated rhs
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < settings.max_iters {
            apply_prec(&basis[k], &mut z);
            let mut w = vec![0.0; len];
            apply_a(&z, &mut w);
            let mut col = vec![0.0; k + 2];
            // modified Gram–Schmidt, two passes
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let hj = dot(&w, v);
                    col[j] += hj;
                    for i in 0..len {
                        w[i] -= hj * v[i];
                    }
                }
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
                col[j] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            total += 1;
            k += 1;
            rel = g[k].abs() / b_norm;
            if rel <= settings.tol || wn == 0.0 {
                break;
            }
            basis.push(w.into_iter().map(|v| v / wn).collect());
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        work.iter_mut().for_each(|v| *v = 0.0);
        for (j, &yj) in y.iter().enumerate() {
            for i in 0..len {
                work[i] += yj * basis[j][i];
            }
        }
        apply_prec(&work, &mut z);
        for i in 0..len {
            x[i] += z[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        // tridiagonal, non-symmetric, diagonally dominant
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 4.0 * x[i];
                if i > 0 {
                    s -= 1.5 * x[i - 1];
                }
                if i + 1 < n {
                    s -= 0.5 * x[i + 1];
                }
                y[i] = s;
            }
        };
        let want: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&want, &mut b);
        let mut x = vec![0.0; n];
        let settings = GmresSettings { tol: 1e-13, max_iters: 200, restart: 7 };
        let jacobi = |v: &[f64], out: &mut [f64]| {
            for (o, x) in out.iter_mut().zip(v) {
                *o = x / 4.0;
            }
        };
        let stats = gmres(apply, jacobi, &b, &mut x, &settings).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        let err = x.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn reports_non_convergence() {
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = (i as f64 + 1.0) * x[i];
            }
        };
        let ident = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        let b = vec![1.0; 30];
        let mut x = vec![0.0; 30];
        let s = GmresSettings { tol: 1e-14, max_iters: 3, restart: 3 };
        assert!(matches!(gmres(apply, ident, &b, &mut x, &s), Err(GmaError::LinearSolve { .. })));
    }

    #[test]
    fn zero_rhs() {
        let mut x = vec![1.0; 4];
        let s = gmres(
            |a, b| b.copy_from_slice(a),
            |a, b| b.copy_from_slice(a),
            &[0.0; 4],
            &mut x,
            &GmresSettings::default(),
        )
        .unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }
}
