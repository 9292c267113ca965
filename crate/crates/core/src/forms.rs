//! Exterior algebra of constant forms on ℂ³ (and ℂ² where it makes sense).
//!
//! Conventions: a real (1,1) form is `γ = i Σ G_kl dz^k ∧ dz̄^l` and is
//! stored as its matrix `G` ([`HermForm`]). Top forms are stored as scalar
//! densities against
//!
//! ```text
//! vol = (i dz¹∧dz̄¹) ∧ (i dz²∧dz̄²) ∧ (i dz³∧dz̄³)
//! ```
//!
//! so that `γ₁∧γ₂∧γ₃ = 6·D(G₁,G₂,G₃)·vol` with `D` the mixed discriminant,
//! and `γ³ = 6 det(G)·vol`. A (2,2) form `β` is represented by the matrix
//! `B` with `β∧γ = tr(B·G)·vol` for every `γ` ([`DualForm22`]); with this
//! normalisation `γ∧γ` has dual `2·adj(G)` and the coefficient matrix of the
//! local equation `det(H) − tr(A·H) = f` is `A = B/6`.

use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::herm::{det3, HermForm, C64};

/// Dual matrix of a (2,2) form on ℂ³ under the wedge pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualForm22(pub HermForm);

impl DualForm22 {
    pub fn new(b: HermForm) -> Result<Self> {
        if b.n() != 3 {
            return Err(GmaError::invalid("(2,2) duals are defined on ℂ³ only"));
        }
        Ok(Self(b))
    }

    pub fn matrix(&self) -> &HermForm {
        &self.0
    }

    /// Density of `β ∧ γ` against `vol`.
    pub fn wedge(&self, gamma: &HermForm) -> f64 {
        self.0.trace_product(gamma)
    }

    /// Coefficient matrix `A = B/6` of the local equation.
    pub fn coefficient(&self) -> HermForm {
        self.0.scale(1.0 / 6.0)
    }

    pub fn from_coefficient(a: &HermForm) -> Self {
        Self(a.scale(6.0))
    }

    /// Strong positivity, operationally `B ≻ 0`.
    pub fn is_strongly_positive(&self) -> bool {
        self.0.is_positive_definite()
    }
}

impl std::ops::Add for DualForm22 {
    type Output = DualForm22;
    fn add(self, rhs: Self) -> Self {
        DualForm22(self.0 + rhs.0)
    }
}

impl std::ops::Sub for DualForm22 {
    type Output = DualForm22;
    fn sub(self, rhs: Self) -> Self {
        DualForm22(self.0 - rhs.0)
    }
}

/// The three pointwise quantities whose strict positivity defines the
/// solution cone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeMargins {
    /// Smallest eigenvalue of the total Hessian `H`.
    pub lambda_min_h: f64,
    /// `det(H) − tr(A·H)`.
    pub residual_margin: f64,
    /// Smallest eigenvalue of `adj(H) − A`.
    pub lambda_min_l: f64,
}

impl ConeMargins {
    pub fn all_positive(&self) -> bool {
        self.lambda_min_h > 0.0 && self.residual_margin > 0.0 && self.lambda_min_l > 0.0
    }

    pub fn min(&self) -> f64 {
        self.lambda_min_h.min(self.residual_margin).min(self.lambda_min_l)
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &ConeMargins) -> ConeMargins {
        ConeMargins {
            lambda_min_h: self.lambda_min_h.min(other.lambda_min_h),
            residual_margin: self.residual_margin.min(other.residual_margin),
            lambda_min_l: self.lambda_min_l.min(other.lambda_min_l),
        }
    }

    pub fn infinite() -> ConeMargins {
        ConeMargins { lambda_min_h: f64::INFINITY, residual_margin: f64::INFINITY, lambda_min_l: f64::INFINITY }
    }
}

fn require_three(forms: &[&HermForm]) -> Result<()> {
    if forms.iter().all(|g| g.n() == 3) {
        Ok(())
    } else {
        Err(GmaError::invalid("operation requires forms on ℂ³"))
    }
}

fn require_same_dim(a: &HermForm, b: &HermForm) -> Result<()> {
    if a.n() == b.n() {
        Ok(())
    } else {
        Err(GmaError::invalid(format!("dimension mismatch: {} vs {}", a.n(), b.n())))
    }
}

const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Mixed discriminant `D(G₁,G₂,G₃)`: the symmetric trilinear form with
/// `D(G,G,G) = det(G)`.
pub fn mixed_discriminant(g1: &HermForm, g2: &HermForm, g3: &HermForm) -> Result<f64> {
    require_three(&[g1, g2, g3])?;
    let gs = [g1.entries(), g2.entries(), g3.entries()];
    let mut total = C64::new(0.0, 0.0);
    for p in PERMS3 {
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for (col, &src) in p.iter().enumerate() {
            for row in 0..3 {
                m[row][col] = gs[src][row][col];
            }
        }
        total += det3(&m);
    }
    Ok(total.re / 6.0)
}

/// Mixed adjugate `Mx(G₁,G₂)`, characterised by `tr(Mx·K) = 6·D(G₁,G₂,K)`;
/// `Mx(G,G) = 2·adj(G)`. It is the dual matrix of `γ₁∧γ₂`.
pub fn mixed_adjugate(g1: &HermForm, g2: &HermForm) -> Result<HermForm> {
    require_three(&[g1, g2])?;
    Ok((*g1 + *g2).adjugate() - g1.adjugate() - g2.adjugate())
}

/// Dual of `γ∧γ`, namely `2·adj(G)`.
pub fn dual_of_square(g: &HermForm) -> Result<DualForm22> {
    require_three(&[g])?;
    Ok(DualForm22(g.adjugate().scale(2.0)))
}

/// Dual of `γ₁∧γ₂`.
pub fn dual_of_product(g1: &HermForm, g2: &HermForm) -> Result<DualForm22> {
    mixed_adjugate(g1, g2).map(DualForm22)
}

/// Density of `γ₁∧γ₂∧γ₃` against `vol`.
pub fn wedge3(g1: &HermForm, g2: &HermForm, g3: &HermForm) -> Result<f64> {
    Ok(6.0 * mixed_discriminant(g1, g2, g3)?)
}

/// Evaluates the three cone margins of `H` against `A`. Works for n = 2 too
/// (with `A` normally zero). Singular or indefinite `H` is reported with its
/// true margins.
pub fn cone_margins(h: &HermForm, a: &HermForm) -> ConeMargins {
    debug_assert_eq!(h.n(), a.n());
    ConeMargins {
        lambda_min_h: h.lambda_min(),
        residual_margin: h.det() - a.trace_product(h),
        lambda_min_l: (h.adjugate() - *a).lambda_min(),
    }
}

/// Checks the implication `H > 0, det(H) − tr(A·H) > 0  ⇒  adj(H) − A ≻ 0`
/// on one instance (vacuously true when the hypothesis fails).
pub fn lemma_useful_holds(h: &HermForm, a: &HermForm) -> Result<bool> {
    require_same_dim(h, a)?;
    if !a.is_positive_definite() {
        return Err(GmaError::invalid("A must be positive definite"));
    }
    Ok(lemma_useful_check(h, a, HermForm::adjugate))
}

/// Same as [`lemma_useful_holds`] with an injectable adjugate, so that the
/// randomized harness can be tested against a deliberately broken one.
pub(crate) fn lemma_useful_check(h: &HermForm, a: &HermForm, adj: impl Fn(&HermForm) -> HermForm) -> bool {
    let hyp = h.lambda_min() > 0.0 && h.det() - a.trace_product(h) > 0.0;
    !hyp || (adj(h) - *a).lambda_min() > 0.0
}

/// `tr(A)/(6 det A)`, the local form of `γ ↦ β∧γ/γ³` in normalised frames.
pub fn trace_over_det(a: &HermForm) -> f64 {
    a.trace() / (6.0 * a.det())
}

/// Convexity slacks `(F(A_t) − tF(A₁) − (1−t)F(A₂), same for G)` with
/// `F(A) = tr(A)/(6 det A)`, `G(A) = 1/det(A)` and `A_t = tA₁ + (1−t)A₂`.
pub fn convexity_probe(a1: &HermForm, a2: &HermForm, t: f64) -> Result<(f64, f64)> {
    require_same_dim(a1, a2)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(GmaError::invalid("t must lie in [0, 1]"));
    }
    if !a1.is_positive_definite() || !a2.is_positive_definite() {
        return Err(GmaError::invalid("convexity probe needs positive definite inputs"));
    }
    let at = t * *a1 + (1.0 - t) * *a2;
    let f = |a: &HermForm| trace_over_det(a);
    let g = |a: &HermForm| 1.0 / a.det();
    Ok((f(&at) - t * f(a1) - (1.0 - t) * f(a2), g(&at) - t * g(a1) - (1.0 - t) * g(a2)))
}

/// Cone margins of the convex combination `tH₁ + (1−t)H₂`, after checking
/// that both endpoints lie in the cone.
pub fn cone_convexity_probe(h1: &HermForm, h2: &HermForm, a: &HermForm, t: f64) -> Result<ConeMargins> {
    require_same_dim(h1, h2)?;
    require_same_dim(h1, a)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(GmaError::invalid("t must lie in [0, 1]"));
    }
    if !cone_margins(h1, a).all_positive() || !cone_margins(h2, a).all_positive() {
        return Err(GmaError::invalid("both endpoints must lie in the cone"));
    }
    Ok(cone_margins(&(t * *h1 + (1.0 - t) * *h2), a))
}

/// Dual of the strongly positive (2,2) form `Σ (iφ_j∧φ̄_j)∧(iΦ_j∧Φ̄_j)` for
/// (1,0) forms `φ_j = Σ a_k dz^k`, `Φ_j = Σ b_k dz^k`.
pub fn strongly_positive_from_products(pairs: &[([C64; 3], [C64; 3])]) -> DualForm22 {
    let mut b = HermForm::zeros(3);
    for (phi, cap_phi) in pairs {
        let p = HermForm::outer(phi);
        let q = HermForm::outer(cap_phi);
        b = b + mixed_adjugate(&p, &q).expect("rank-one forms on ℂ³");
    }
    DualForm22(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_pd, random_unitary_with_spectrum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cofactor_adjugate(h: &HermForm) -> [[C64; 3]; 3] {
        // adj = transpose of the cofactor matrix, by explicit minors
        let m = h.entries();
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let rows: Vec<usize> = (0..3).filter(|&r| r != i).collect();
                let cols: Vec<usize> = (0..3).filter(|&c| c != j).collect();
                let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                out[j][i] = minor * sign;
            }
        }
        out
    }

    #[test]
    fn mixed_discriminant_examples() {
        let id = HermForm::identity(3);
        assert!((mixed_discriminant(&id, &id, &id).unwrap() - 1.0).abs() < 1e-15);
        let e = |k: usize| {
            let mut d = [0.0; 3];
            d[k] = 1.0;
            HermForm::diag(&d)
        };
        let d = mixed_discriminant(&e(0), &e(1), &e(2)).unwrap();
        assert!((d - 1.0 / 6.0).abs() < 1e-15);
        assert!(mixed_discriminant(&HermForm::identity(2), &id, &id).is_err());
    }

    #[test]
    fn mixed_discriminant_diagonal_is_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = random_hermitian(&mut rng, 3, 2.0);
            let d = mixed_discriminant(&g, &g, &g).unwrap();
            assert!((d - g.det()).abs() < 1e-12 * (1.0 + g.det().abs()));
        }
    }

    #[test]
    fn mixed_discriminant_symmetric_and_multilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_hermitian(&mut rng, 3, 1.0);
            let b = random_hermitian(&mut rng, 3, 1.0);
            let c = random_hermitian(&mut rng, 3, 1.0);
            let c2 = random_hermitian(&mut rng, 3, 1.0);
            let s: f64 = rng.gen_range(-2.0..2.0);
            let d = mixed_discriminant(&a, &b, &c).unwrap();
            let scale = 1.0 + d.abs();
            for p in PERMS3 {
                let args = [&a, &b, &c];
                let dp = mixed_discriminant(args[p[0]], args[p[1]], args[p[2]]).unwrap();
                assert!((dp - d).abs() < 1e-12 * scale);
            }
            let lhs = mixed_discriminant(&a, &b, &(c + s * c2)).unwrap();
            let rhs = d + s * mixed_discriminant(&a, &b, &c2).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn mixed_adjugate_examples() {
        let id = HermForm::identity(3);
        assert_eq!(mixed_adjugate(&id, &id).unwrap(), HermForm::diag(&[2.0, 2.0, 2.0]));
        let m = mixed_adjugate(&HermForm::diag(&[1.0, 0.0, 0.0]), &HermForm::diag(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(m, HermForm::diag(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn mixed_adjugate_pairs_with_discriminant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g1 = random_hermitian(&mut rng, 3, 1.0);
            let g2 = random_hermitian(&mut rng, 3, 1.0);
            let k = random_hermitian(&mut rng, 3, 1.0);
            let mx = mixed_adjugate(&g1, &g2).unwrap();
            let want = 6.0 * mixed_discriminant(&g1, &g2, &k).unwrap();
            assert!((mx.trace_product(&k) - want).abs() < 1e-12 * (1.0 + want.abs()));

            let half = mixed_adjugate(&g1, &g1).unwrap().scale(0.5);
            let oracle = cofactor_adjugate(&g1);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((half.get(i, j) - oracle[i][j]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn dual_of_square_examples() {
        assert_eq!(dual_of_square(&HermForm::identity(3)).unwrap().0, HermForm::diag(&[2.0, 2.0, 2.0]));
        assert_eq!(dual_of_square(&HermForm::diag(&[0.0, 3.0, 1.0])).unwrap().0, HermForm::diag(&[6.0, 0.0, 0.0]));
        assert_eq!(dual_of_square(&HermForm::diag(&[1.0, 4.0, 4.0])).unwrap().0, HermForm::diag(&[32.0, 8.0, 8.0]));
    }

    #[test]
    fn hodge_star_cross_check_in_orthonormal_frame() {
        // With γ = Id the Hodge star of β has matrix B, and γ²/2 has dual
        // adj(Id) = Id, so *β∧γ²/2 = tr(B) = β∧γ.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = DualForm22(random_pd(&mut rng, 3, 0.5, 2.0));
        let gamma = HermForm::identity(3);
        let half_square = dual_of_square(&gamma).unwrap().0.scale(0.5);
        assert!((b.wedge(&gamma) - half_square.trace_product(b.matrix())).abs() < 1e-14);
    }

    #[test]
    fn sum_of_products_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vec3 =
            |rng: &mut ChaCha8Rng| [0, 1, 2].map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        for terms in 1..6 {
            let pairs: Vec<_> = (0..terms).map(|_| (vec3(&mut rng), vec3(&mut rng))).collect();
            let b = strongly_positive_from_products(&pairs);
            assert!(b.0.lambda_min() > -1e-12);
            if terms >= 3 {
                assert!(b.is_strongly_positive());
            }
        }
    }

    #[test]
    fn cone_margin_examples() {
        let id = HermForm::identity(3);
        let a = id.scale(1.0 / 6.0);
        let m = cone_margins(&id, &a);
        assert!((m.lambda_min_h - 1.0).abs() < 1e-15);
        assert!((m.residual_margin - 0.5).abs() < 1e-15);
        assert!((m.lambda_min_l - 5.0 / 6.0).abs() < 1e-15);

        let m = cone_margins(&HermForm::diag(&[0.1, 1.0, 1.0]), &a);
        assert!((m.residual_margin + 0.25).abs() < 1e-15);
        assert!(!m.all_positive());

        // singular H is evaluated, not rejected
        let m = cone_margins(&HermForm::diag(&[0.0, 1.0, 1.0]), &a);
        assert_eq!(m.lambda_min_h, 0.0);
    }

    #[test]
    fn diagonal_predicate_implies_ellipticity() {
        // Frame where the γ-Hodge star of β is the identity form: β∧γ is
        // σ₂(λ) and the dual of β is diag(λⱼλₖ/λᵢ).
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut hits = 0;
        for _ in 0..20_000 {
            let l: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(0.01..3.0));
            let sym2 = l[0] * l[1] + l[0] * l[2] + l[1] * l[2];
            let a = HermForm::diag(&[l[1] * l[2] / l[0] / 6.0, l[0] * l[2] / l[1] / 6.0, l[0] * l[1] / l[2] / 6.0]);
            let m = cone_margins(&HermForm::diag(&l), &a);
            assert!((6.0 * m.residual_margin - (6.0 * l[0] * l[1] * l[2] - sym2)).abs() < 1e-12);
            if 6.0 * l[0] * l[1] * l[2] - sym2 > 0.0 {
                hits += 1;
                assert!(m.lambda_min_l > 0.0);
                assert!(l.iter().all(|&x| 6.0 * x > 1.0));
            }
        }
        assert!(hits > 1000);
    }

    #[test]
    fn predicate_with_identity_coefficient_is_a_different_condition() {
        // 6λ₁λ₂λ₃ > σ₂ holds, but with A = Id/6 the cone hypothesis fails
        // and adj(H) − A is indefinite, consistent with the lemma
        let l = [3.0, 0.4, 0.4];
        assert!(6.0 * l[0] * l[1] * l[2] > l[0] * l[1] + l[0] * l[2] + l[1] * l[2]);
        let m = cone_margins(&HermForm::diag(&l), &HermForm::identity(3).scale(1.0 / 6.0));
        assert!(m.residual_margin < 0.0);
        assert!(m.lambda_min_l < 0.0);
    }

    #[test]
    fn lemma_useful_examples() {
        let id = HermForm::identity(3);
        assert!(lemma_useful_holds(&id, &id.scale(1.0 / 6.0)).unwrap());
        // A = 2.9/6 · Id: det − tr(AH) = 1 − 1.45 < 0, so the hypothesis fails.
        assert!(lemma_useful_holds(&id, &id.scale(2.9 / 6.0)).unwrap());
        assert!(lemma_useful_holds(&id, &HermForm::zeros(3)).is_err());
    }

    #[test]
    fn corrupted_adjugate_is_caught() {
        let id = HermForm::identity(3);
        let a = id.scale(1.0 / 6.0);
        assert!(!lemma_useful_check(&id, &a, |h| h.adjugate().scale(0.1)));
    }

    #[test]
    fn convexity_examples() {
        let id = HermForm::identity(3);
        let (f, g) = convexity_probe(&id, &id, 0.5).unwrap();
        assert!(f.abs() < 1e-15 && g.abs() < 1e-15);
        let (f, g) = convexity_probe(&id, &id.scale(2.0), 0.5).unwrap();
        // F(1.5 Id) = 4.5/(6·3.375), F(Id) = 1/2, F(2 Id) = 6/48
        let want_f = 4.5 / (6.0 * 3.375) - 0.5 * (0.5 + 0.125);
        assert!((f - want_f).abs() < 1e-15 && f < 0.0);
        assert!(g < 0.0);
        assert!(convexity_probe(&id, &-id, 0.5).is_err());
    }

    #[test]
    fn cone_convexity_examples() {
        let id = HermForm::identity(3);
        let a = id.scale(1.0 / 6.0);
        let m = cone_convexity_probe(&id, &id, &a, 0.3).unwrap();
        assert!((m.lambda_min_h - 1.0).abs() < 1e-15);
        assert!((m.residual_margin - 0.5).abs() < 1e-15);
        assert!((m.lambda_min_l - 5.0 / 6.0).abs() < 1e-15);
        let m = cone_convexity_probe(&id, &id.scale(2.0), &a, 0.5).unwrap();
        assert!(m.all_positive());
        assert!(cone_convexity_probe(&id, &id.scale(0.1), &a, 0.5).is_err());
    }

    #[test]
    fn random_unitary_conjugation_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_unitary_with_spectrum(&mut rng, &[0.5, 2.0, 7.0]);
        let ev = h.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-13 && (ev[2] - 7.0).abs() < 1e-13);
    }
}
