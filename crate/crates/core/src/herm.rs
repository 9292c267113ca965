//! Small Hermitian matrices (n = 2 or 3) holding the coefficients of real
//! (1,1) forms `i Σ G_kl dz^k ∧ dz̄^l`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Entrywise tolerance used when validating user-supplied Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// Coefficient matrix of a real (1,1) form on ℂ² or ℂ³.
///
/// Only the leading `n × n` block of `m` is meaningful; the rest is zero.
/// Constructors keep the matrix exactly Hermitian (real diagonal, mirrored
/// lower triangle).
#[derive(Clone, Copy, PartialEq)]
pub struct HermForm {
    n: usize,
    m: [[C64; 3]; 3],
}

impl fmt::Debug for HermForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows = f.debug_list();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self.m[i][j];
                    if z.im == 0.0 {
                        format!("{}", z.re)
                    } else {
                        format!("{}{:+}i", z.re, z.im)
                    }
                })
                .collect();
            rows.entry(&row);
        }
        rows.finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(GmaError::invalid(format!("dimension must be 2 or 3, got {n}")))
    }
}

impl HermForm {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 2 || n == 3, "dimension must be 2 or 3");
        Self { n, m: [[ZERO; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    /// Diagonal form; panics unless `d.len()` is 2 or 3.
    pub fn diag(d: &[f64]) -> Self {
        let mut h = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            h.m[i][i] = C64::new(v, 0.0);
        }
        h
    }

    /// Builds a form from a full complex matrix, rejecting input that is not
    /// Hermitian to within [`HERMITIAN_TOL`].
    pub fn new(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        check_dim(n)?;
        if rows.iter().any(|r| r.len() != n) {
            return Err(GmaError::invalid("matrix is not square"));
        }
        for i in 0..n {
            for j in 0..n {
                let d = rows[i][j] - rows[j][i].conj();
                if d.norm() > HERMITIAN_TOL * (1.0 + rows[i][j].norm()) {
                    return Err(GmaError::invalid(format!("matrix is not Hermitian at ({i},{j})")));
                }
            }
        }
        Ok(Self::from_upper_fn(n, |i, j| rows[i][j]))
    }

    /// Real symmetric input.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let c: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::new(&c)
    }

    /// Fills the upper triangle from `f` and mirrors it; diagonal imaginary
    /// parts are dropped.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.m[i][i] = C64::new(f(i, i).re, 0.0);
            for j in i + 1..n {
                let z = f(i, j);
                h.m[i][j] = z;
                h.m[j][i] = z.conj();
            }
        }
        h
    }

    /// Rank-one form `v v*`, i.e. the matrix of `i φ ∧ φ̄` for `φ = Σ v_k dz^k`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_upper_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    /// Sets entry `(i, j)` and its mirror.
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        if i == j {
            self.m[i][i] = C64::new(z.re, 0.0);
        } else {
            self.m[i][j] = z;
            self.m[j][i] = z.conj();
        }
    }

    pub fn entries(&self) -> &[[C64; 3]; 3] {
        &self.m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut h = *self;
        for row in h.m.iter_mut() {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        h
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.m[i][i].re).sum()
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    #[inline]
    pub fn trace_product(&self, other: &HermForm) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            s += self.m[i][i].re * other.m[i][i].re;
            for j in i + 1..n {
                // a_ij b_ji + a_ji b_ij = 2 Re(a_ij b_ji)
                s += 2.0 * (self.m[i][j] * other.m[j][i]).re;
            }
        }
        s
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.n {
            2 => m[0][0].re * m[1][1].re - m[0][1].norm_sqr(),
            _ => det3(m).re,
        }
    }

    /// Classical adjugate (transpose of the cofactor matrix); equals
    /// `det(H) H⁻¹` when `H` is invertible.
    pub fn adjugate(&self) -> Self {
        let m = &self.m;
        match self.n {
            2 => Self::from_upper_fn(2, |i, j| match (i, j) {
                (0, 0) => m[1][1],
                (1, 1) => m[0][0],
                _ => -m[0][1],
            }),
            _ => Self::from_upper_fn(3, |i, j| {
                // adj_ij = cofactor_ji
                let (r0, r1) = others(j);
                let (c0, c1) = others(i);
                let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            }),
        }
    }

    /// Plain matrix product; the result is generally not Hermitian.
    pub fn matmul(&self, other: &HermForm) -> [[C64; 3]; 3] {
        let mut out = [[ZERO; 3]; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i][j] = (0..self.n).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues in ascending order.
    ///
    /// Closed form (trigonometric solution of the characteristic cubic); when
    /// the smallest eigenvalue is small relative to the matrix norm the
    /// result is recomputed with cyclic Jacobi on the real 2n×2n embedding,
    /// which keeps the sign of near-boundary margins reliable.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let ev = self.eigenvalues_closed_form();
        let scale = ev[0].abs().max(ev[self.n - 1].abs());
        if scale > 0.0 && ev[0].abs() < 1e-7 * scale {
            return self.eigenvalues_jacobi();
        }
        // the trigonometric form loses half the digits near a double root
        if self.n == 3 {
            let gap = (ev[1] - ev[0]).min(ev[2] - ev[1]);
            if gap < 1e-4 * (ev[2] - ev[0]) {
                return self.eigenvalues_deflated(ev).unwrap_or_else(|| self.eigenvalues_jacobi());
            }
        }
        ev
    }

    /// Keeps the isolated root of `ev` (well conditioned) and recomputes the
    /// close pair from the 2×2 compression onto its eigenvector's complement.
    fn eigenvalues_deflated(&self, ev: [f64; 3]) -> Option<[f64; 3]> {
        let simple = if ev[1] - ev[0] < ev[2] - ev[1] { ev[2] } else { ev[0] };
        let mut r = self.m;
        for (i, row) in r.iter_mut().enumerate() {
            row[i] -= simple;
        }
        let cross = |a: &[C64; 3], b: &[C64; 3]| {
            [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        };
        let norm = |v: &[C64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // rows of H − λI are annihilated (bilinearly) by the eigenvector
        let v = [cross(&r[0], &r[1]), cross(&r[1], &r[2]), cross(&r[2], &r[0])]
            .into_iter()
            .max_by(|a, b| norm(a).total_cmp(&norm(b)))?;
        let nv = norm(&v);
        if !(nv > 0.0) || !nv.is_finite() {
            return None;
        }
        let v = v.map(|z| z / nv);
        let k = (0..3).min_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))?;
        let mut u1 = v.map(|z| -z * v[k].conj());
        u1[k] += 1.0;
        let n1 = norm(&u1);
        let u1 = u1.map(|z| z / n1);
        let u2 = cross(&v, &u1).map(|z| z.conj());
        let form = |a: &[C64; 3], b: &[C64; 3]| {
            let mut s = ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    s += a[i].conj() * self.m[i][j] * b[j];
                }
            }
            s
        };
        let c = HermForm {
            n: 2,
            m: [
                [C64::new(form(&u1, &u1).re, 0.0), form(&u1, &u2), ZERO],
                [form(&u2, &u1), C64::new(form(&u2, &u2).re, 0.0), ZERO],
                [ZERO; 3],
            ],
        };
        let pair = c.eigenvalues_closed_form();
        let mut out = [simple, pair[0], pair[1]];
        out.sort_by(|a, b| a.total_cmp(b));
        Some(out)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Closed-form eigenvalues, ascending; unused trailing slot is NaN for n = 2.
    pub fn eigenvalues_closed_form(&self) -> [f64; 3] {
        let m = &self.m;
        if self.n == 2 {
            let a = m[0][0].re;
            let d = m[1][1].re;
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + m[0][1].norm_sqr()).sqrt();
            return [mean - r, mean + r, f64::NAN];
        }
        let off = m[0][1].norm_sqr() + m[0][2].norm_sqr() + m[1][2].norm_sqr();
        let q = self.trace() / 3.0;
        let d0 = m[0][0].re - q;
        let d1 = m[1][1].re - q;
        let d2 = m[2][2].re - q;
        let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off;
        if p2 == 0.0 {
            return [q, q, q];
        }
        let p = (p2 / 6.0).sqrt();
        let mut b = *self;
        for (i, row) in b.m.iter_mut().enumerate() {
            for (j, z) in row.iter_mut().enumerate() {
                if i == j {
                    *z = (*z - q) / p;
                } else {
                    *z /= p;
                }
            }
        }
        let r = (0.5 * b.det()).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let mid = 3.0 * q - hi - lo;
        let mut ev = [lo, mid, hi];
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Eigenvalues by cyclic Jacobi on the real symmetric embedding
    /// `[[Re M, -Im M], [Im M, Re M]]` (each eigenvalue appears twice).
    pub fn eigenvalues_jacobi(&self) -> [f64; 3] {
        let n = self.n;
        let dim = 2 * n;
        let mut a = [[0.0f64; 6]; 6];
        for i in 0..n {
            for j in 0..n {
                let z = self.m[i][j];
                a[i][j] = z.re;
                a[i + n][j + n] = z.re;
                a[i][j + n] = -z.im;
                a[i + n][j] = z.im;
            }
        }
        for _sweep in 0..60 {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..dim {
                diag += a[i][i] * a[i][i];
                for j in i + 1..dim {
                    off += a[i][j] * a[i][j];
                }
            }
            if off <= 1e-34 * diag || off == 0.0 {
                break;
            }
            for p in 0..dim {
                for q in p + 1..dim {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..dim {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..dim {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..dim).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| x.total_cmp(y));
        let mut ev = [f64::NAN; 3];
        for i in 0..n {
            ev[i] = 0.5 * (d[2 * i] + d[2 * i + 1]);
        }
        ev
    }

    /// Positive definiteness by Cholesky.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut l = [[ZERO; 3]; 3];
        for j in 0..n {
            let mut d = self.m[j][j].re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let djj = d.sqrt();
            l[j][j] = C64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = self.m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / djj;
            }
        }
        true
    }

    /// Hermitian defect `max |M_ij - conj(M_ji)|`; zero for anything built
    /// through this type's constructors.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                d = d.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        d
    }
}

#[inline]
fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

#[inline]
pub(crate) fn det3(m: &[[C64; 3]; 3]) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl Add for HermForm {
    type Output = HermForm;
    fn add(self, rhs: HermForm) -> HermForm {
        debug_assert_eq!(self.n, rhs.n);
        let mut h = self;
        for i in 0..3 {
            for j in 0..3 {
                h.m[i][j] += rhs.m[i][j];
            }
        }
        h
    }
}

impl Sub for HermForm {
    type Output = HermForm;
    fn sub(self, rhs: HermForm) -> HermForm {
        self + (-rhs)
    }
}

impl Neg for HermForm {
    type Output = HermForm;
    fn neg(self) -> HermForm {
        self.scale(-1.0)
    }
}

impl Mul<HermForm> for f64 {
    type Output = HermForm;
    fn mul(self, rhs: HermForm) -> HermForm {
        rhs.scale(self)
    }
}

/// Serialized as `{ re = [[..]], im = [[..]] }` with `im` optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermFormRepr {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl TryFrom<&HermFormRepr> for HermForm {
    type Error = GmaError;
    fn try_from(r: &HermFormRepr) -> Result<Self> {
        let n = r.re.len();
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..r.re[i].len())
                    .map(|j| {
                        let im =
                            r.im.as_ref().and_then(|m| m.get(i).and_then(|row| row.get(j)).copied()).unwrap_or(0.0);
                        C64::new(r.re[i][j], im)
                    })
                    .collect()
            })
            .collect();
        if let Some(im) = &r.im {
            if im.len() != n || im.iter().zip(&r.re).any(|(a, b)| a.len() != b.len()) {
                return Err(GmaError::invalid("imaginary part shape differs from real part"));
            }
        }
        HermForm::new(&rows)
    }
}

impl From<&HermForm> for HermFormRepr {
    fn from(h: &HermForm) -> Self {
        let n = h.n;
        let re = (0..n).map(|i| (0..n).map(|j| h.m[i][j].re).collect()).collect();
        let any_im = (0..n).any(|i| (0..n).any(|j| h.m[i][j].im != 0.0));
        let im = any_im.then(|| (0..n).map(|i| (0..n).map(|j| h.m[i][j].im).collect()).collect());
        HermFormRepr { re, im }
    }
}
