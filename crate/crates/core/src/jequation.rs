//! The J-equation `ω̃_φ³ = χ∧ω̃_φ²` as a special case of the generalised
//! equation: with `ω = ω̃ − χ/3`, `α = χ²/3` and `η = (2/27)χ³`,
//!
//! ```text
//! ω̃_φ³ − χ∧ω̃_φ² = ω_φ³ − α∧ω_φ − η
//! ```
//!
//! holds identically in `φ`. In density units (top forms divided by `6·vol`)
//! this reads `det(G̃) − tr(adj(G̃)·χ)/3 = det(G) − tr(A·G) − (2/27)det(χ)`
//! with `A = adj(χ)/9`.
//!
//! Solvability needs the class condition `∫ω̃³ = ∫χ∧ω̃²`. For constant
//! representatives this pins the constants, and the solution is `φ = 0`.
//! Pairs that miss it are reported as infeasible, not renormalised.

use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::forms::mixed_adjugate;
use crate::grid::{GridSpec, ScalarField, Spectral};
use crate::herm::HermForm;
use crate::solver::{Forcing, ProblemSpec, MASS_TOL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JEquationData {
    chi: HermForm,
    g_tilde: HermForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JEquationReport {
    pub lambda_min_chi: f64,
    pub lambda_min_g_tilde: f64,
    /// `λ_min` of the dual of `3ω̃² − 2χ∧ω̃`.
    pub hypothesis_margin: f64,
    /// `λ_min(ω̃ − χ/3)`.
    pub lambda_min_omega: f64,
    /// `(ω̃³ − χ∧ω̃²)/ω̃³`.
    pub mass_defect: f64,
}

impl JEquationData {
    /// Accepts `χ ≻ 0`, `ω̃ ≻ 0` with `3ω̃² > 2χ∧ω̃`; anything else is an
    /// invalid-input error.
    pub fn new(chi: HermForm, g_tilde: HermForm) -> Result<Self> {
        if chi.n() != 3 || g_tilde.n() != 3 {
            return Err(GmaError::invalid("the J-equation builder works on ℂ³"));
        }
        let data = Self { chi, g_tilde };
        let r = data.report();
        if !(r.lambda_min_chi > 0.0) || !(r.lambda_min_g_tilde > 0.0) {
            return Err(GmaError::invalid("χ and ω̃ must be positive definite"));
        }
        if !(r.hypothesis_margin > 0.0) {
            return Err(GmaError::invalid(format!("3ω̃² − 2χ∧ω̃ is not positive (margin {:.3e})", r.hypothesis_margin)));
        }
        Ok(data)
    }

    /// Rescales `χ` so that the class condition holds exactly.
    pub fn with_matched_class(chi: HermForm, g_tilde: HermForm) -> Result<Self> {
        let s = 3.0 * g_tilde.det() / g_tilde.adjugate().trace_product(&chi);
        if !(s.is_finite() && s > 0.0) {
            return Err(GmaError::invalid("cannot match classes for this pair"));
        }
        Self::new(chi.scale(s), g_tilde)
    }

    pub fn chi(&self) -> &HermForm {
        &self.chi
    }

    pub fn g_tilde(&self) -> &HermForm {
        &self.g_tilde
    }

    /// `ω = ω̃ − χ/3`.
    pub fn omega(&self) -> HermForm {
        self.g_tilde - self.chi.scale(1.0 / 3.0)
    }

    /// `A = dual(χ²/3)/6 = adj(χ)/9`.
    pub fn coefficient(&self) -> HermForm {
        self.chi.adjugate().scale(1.0 / 9.0)
    }

    /// Density of `(2/27)χ³`.
    pub fn eta_density(&self) -> f64 {
        2.0 / 27.0 * self.chi.det()
    }

    pub fn report(&self) -> JEquationReport {
        let dual = self.g_tilde.adjugate().scale(6.0)
            - mixed_adjugate(&self.chi, &self.g_tilde).expect("3×3 inputs").scale(2.0);
        let top = self.g_tilde.det();
        let defect = top - self.g_tilde.adjugate().trace_product(&self.chi) / 3.0;
        JEquationReport {
            lambda_min_chi: self.chi.lambda_min(),
            lambda_min_g_tilde: self.g_tilde.lambda_min(),
            hypothesis_margin: dual.lambda_min(),
            lambda_min_omega: self.omega().lambda_min(),
            mass_defect: defect / top,
        }
    }

    /// The generalised-equation data on `grid`. Refuses pairs whose classes
    /// do not match, and pairs with `ω̃ − χ/3` not positive.
    pub fn problem_spec(&self, grid: &GridSpec) -> Result<ProblemSpec> {
        if grid.n() != 3 {
            return Err(GmaError::invalid("grid must be six-dimensional"));
        }
        let r = self.report();
        if !(r.mass_defect.abs() <= MASS_TOL) {
            return Err(GmaError::Infeasible(format!("∫ω̃³ ≠ ∫χ∧ω̃² (relative defect {:.3e})", r.mass_defect)));
        }
        if !(r.lambda_min_omega > 0.0) {
            return Err(GmaError::HypothesisViolation(format!(
                "ω̃ − χ/3 is not positive (λ_min = {:.3e})",
                r.lambda_min_omega
            )));
        }
        ProblemSpec::new(
            self.omega(),
            self.coefficient(),
            Forcing::Density(ScalarField::constant(grid, self.eta_density())),
            0.0,
        )
    }

    /// Pointwise density of `ω̃_φ³ − χ∧ω̃_φ²`.
    pub fn j_operator(&self, phi: &ScalarField) -> Result<ScalarField> {
        self.pointwise(phi, |h| {
            let gt = self.g_tilde + *h;
            gt.det() - gt.adjugate().trace_product(&self.chi) / 3.0
        })
    }

    /// Pointwise `(ω̃_φ³ − χ∧ω̃_φ²) − (ω_φ³ − α∧ω_φ − η)`, zero for every
    /// `φ` up to rounding.
    pub fn identity_defect(&self, phi: &ScalarField) -> Result<ScalarField> {
        let omega = self.omega();
        let a = self.coefficient();
        let eta = self.eta_density();
        self.pointwise(phi, |h| {
            let gt = self.g_tilde + *h;
            let g = omega + *h;
            let lhs = gt.det() - gt.adjugate().trace_product(&self.chi) / 3.0;
            let rhs = g.det() - a.trace_product(&g) - eta;
            lhs - rhs
        })
    }

    fn pointwise(&self, phi: &ScalarField, f: impl Fn(&HermForm) -> f64) -> Result<ScalarField> {
        if phi.grid().n() != 3 {
            return Err(GmaError::invalid("phi must live on a six-dimensional grid"));
        }
        let spectral = Spectral::new(phi.grid());
        let comps = spectral.hessian_components(&spectral.forward(phi.values()));
        let values = (0..phi.values().len()).map(|p| f(&comps.at(3, p))).collect();
        Ok(ScalarField::from_vec_unchecked(phi.grid().clone(), values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::band_limited_random;

    #[test]
    fn scaled_identity_pair() {
        // ω̃ = Id, χ = 2Id: 3ω̃² − 2χ∧ω̃ has dual 6 − 8 < 0
        assert!(JEquationData::new(HermForm::identity(3).scale(2.0), HermForm::identity(3)).is_err());
        let j = JEquationData::with_matched_class(HermForm::identity(3), HermForm::identity(3)).unwrap();
        assert_eq!(*j.chi(), HermForm::identity(3));
        assert!((j.omega() - HermForm::identity(3).scale(2.0 / 3.0)).max_abs() < 1e-15);
        let grid = GridSpec::uniform(3, 2).unwrap();
        let spec = j.problem_spec(&grid).unwrap();
        let f0 = crate::solver::base_density(&spec).unwrap();
        assert!((f0 - 2.0 / 27.0).abs() < 1e-15);
        assert!(j.j_operator(&ScalarField::zeros(&grid)).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn unmatched_classes_are_infeasible() {
        let j = JEquationData::new(HermForm::identity(3).scale(0.5), HermForm::identity(3)).unwrap();
        assert!(j.report().mass_defect > 0.1);
        let grid = GridSpec::uniform(3, 2).unwrap();
        assert!(matches!(j.problem_spec(&grid), Err(GmaError::Infeasible(_))));
        // the identity itself does not depend on feasibility
        let g = GridSpec::uniform(3, 4).unwrap();
        let phi = band_limited_random(&g, 5, 1, 0.01).unwrap();
        assert!(j.identity_defect(&phi).unwrap().sup_norm() < 1e-14);
    }
}
