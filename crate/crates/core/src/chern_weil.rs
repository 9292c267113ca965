//! Direct sums of hermitian line bundles with constant curvature on flat
//! tori, and the reduction of "prescribe the top Chern character form" to the
//! generalised Monge–Ampère equation.
//!
//! Changing every summand metric by `e^{−2πφ}` shifts each normalised
//! curvature form `ωᵢ` by `ddc φ`, so `tr(Θⁿ) = Σᵢ (ωᵢ + ddc φ)ⁿ`. With
//! `c = tr(Θ₀)/k` and `θ = ddc φ` one has on a threefold
//!
//! ```text
//! Σ (ωᵢ + θ)³ = k·[(c + θ)³ − α∧(c + θ)] + tr(Θ₀³) + (2 tr(Θ₀)³ − 3k tr(Θ₀)∧tr(Θ₀²))/k²,
//! α = 3 tr(Θ₀)²/k² − 3 tr(Θ₀²)/k,
//! ```
//!
//! and on a surface `Σ (ωᵢ + θ)² = k(c + θ)² + tr(Θ₀²) − tr(Θ₀)²/k`.
//!
//! Densities here are top forms against `vol` (so `γ³ = 6 det(G)`,
//! `γ² = 2 det(G)` on ℂ²); the reduced [`ProblemSpec`] uses the solver's
//! units, which divide by 6 (resp. 2).

use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::forms::{dual_of_square, DualForm22};
use crate::grid::{pairwise_sum, GridSpec, ScalarField, Spectral};
use crate::herm::{HermForm, HermFormRepr};
use crate::solver::{check_problem_hypotheses, Forcing, ProblemSpec, MASS_TOL};

/// A hermitian direct sum `L₁ ⊕ … ⊕ L_k` given by the constant normalised
/// curvature matrices of its summands.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectSumBundle {
    summands: Vec<HermForm>,
}

impl DirectSumBundle {
    pub fn new(summands: Vec<HermForm>) -> Result<Self> {
        let Some(first) = summands.first() else {
            return Err(GmaError::invalid("a bundle needs at least one summand"));
        };
        let n = first.n();
        if summands.iter().any(|g| g.n() != n) {
            return Err(GmaError::invalid("summands must share the base dimension"));
        }
        Ok(Self { summands })
    }

    pub fn n(&self) -> usize {
        self.summands[0].n()
    }

    pub fn rank(&self) -> usize {
        self.summands.len()
    }

    pub fn summands(&self) -> &[HermForm] {
        &self.summands
    }
}

/// Serialised bundle description: `n`, the rank `k` (optional, checked
/// against the summand count) and one matrix per summand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub summands: Vec<HermFormRepr>,
}

impl TryFrom<&BundleFile> for DirectSumBundle {
    type Error = GmaError;

    fn try_from(file: &BundleFile) -> Result<Self> {
        if file.k.is_some_and(|k| k != file.summands.len()) {
            return Err(GmaError::invalid(format!(
                "bundle declares k = {} but lists {} summands",
                file.k.unwrap_or(0),
                file.summands.len()
            )));
        }
        let summands = file.summands.iter().map(HermForm::try_from).collect::<Result<Vec<_>>>()?;
        let bundle = DirectSumBundle::new(summands)?;
        if bundle.n() != file.n {
            return Err(GmaError::invalid(format!(
                "bundle declares n = {} but its matrices are {}×{}",
                file.n,
                bundle.n(),
                bundle.n()
            )));
        }
        Ok(bundle)
    }
}

impl From<&DirectSumBundle> for BundleFile {
    fn from(b: &DirectSumBundle) -> Self {
        BundleFile { n: b.n(), k: Some(b.rank()), summands: b.summands.iter().map(HermFormRepr::from).collect() }
    }
}

/// Curvature traces of a direct sum.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceData {
    pub k: usize,
    /// `tr Θ₀ = Σ Gᵢ`.
    pub tr1: HermForm,
    /// Dual matrix of `tr(Θ₀²)` (threefolds).
    pub tr2_dual: Option<DualForm22>,
    /// Density of `tr(Θ₀²)` (surfaces).
    pub tr2_density: Option<f64>,
    /// Density of `tr(Θ₀³)` (threefolds).
    pub tr3_density: Option<f64>,
}

impl TraceData {
    /// Density of `tr(Θ₀ⁿ)`, the class that `η` must represent.
    pub fn top_density(&self) -> f64 {
        self.tr3_density.or(self.tr2_density).unwrap_or(0.0)
    }

    /// `tr(Θ₀)ⁿ` as a density.
    pub fn tr1_power_density(&self) -> f64 {
        match self.tr1.n() {
            2 => 2.0 * self.tr1.det(),
            _ => 6.0 * self.tr1.det(),
        }
    }

    /// `tr(Θ₀)∧tr(Θ₀²)` density (threefolds).
    pub fn tr1_wedge_tr2(&self) -> Option<f64> {
        self.tr2_dual.map(|b| b.wedge(&self.tr1))
    }

    /// `−2 tr(Θ₀)³ + 3k tr(Θ₀)∧tr(Θ₀²)` (threefolds).
    pub fn cubic_margin(&self) -> Option<f64> {
        let k = self.k as f64;
        self.tr1_wedge_tr2().map(|w| -2.0 * self.tr1_power_density() + 3.0 * k * w)
    }

    /// Dual matrix of `α = 3 tr(Θ₀)²/k² − 3 tr(Θ₀²)/k` (threefolds).
    pub fn alpha_dual(&self) -> Option<DualForm22> {
        let k = self.k as f64;
        let b2 = self.tr2_dual?;
        let sq = dual_of_square(&self.tr1).ok()?;
        Some(DualForm22(sq.0.scale(3.0 / (k * k)) - b2.0.scale(3.0 / k)))
    }
}

pub fn curvature_traces(bundle: &DirectSumBundle) -> TraceData {
    let n = bundle.n();
    let mut tr1 = HermForm::zeros(n);
    for g in bundle.summands() {
        tr1 = tr1 + *g;
    }
    let k = bundle.rank();
    if n == 3 {
        let mut b = HermForm::zeros(3);
        for g in bundle.summands() {
            b = b + g.adjugate().scale(2.0);
        }
        let tr3 = bundle.summands().iter().map(|g| 6.0 * g.det()).sum();
        TraceData { k, tr1, tr2_dual: Some(DualForm22(b)), tr2_density: None, tr3_density: Some(tr3) }
    } else {
        let tr2 = bundle.summands().iter().map(|g| 2.0 * g.det()).sum();
        TraceData { k, tr1, tr2_dual: None, tr2_density: Some(tr2), tr3_density: None }
    }
}

/// Margins of the solvability hypotheses for one bundle and target `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwReport {
    /// 1 for surfaces, 2 for threefolds.
    pub case: u8,
    pub lambda_min_tr1: f64,
    /// `λ_min(dual(α))` (threefolds).
    pub alpha_min: Option<f64>,
    /// `−2 tr(Θ₀)³ + 3k tr(Θ₀)∧tr(Θ₀²)` (threefolds).
    pub cubic_margin: Option<f64>,
    /// Grid minimum of `tr(Θ₀)² + k(η − tr(Θ₀²))` (surfaces) or
    /// `k²(η − tr(Θ₀³)) − 2 tr(Θ₀)³ + 3k tr(Θ₀)∧tr(Θ₀²)` (threefolds).
    pub eta_margin: f64,
    /// Density of `ω³ − α∧ω` for `ω = tr(Θ₀)/k` (`ω²` on surfaces).
    pub base_density: f64,
    /// `|mean(η) − tr(Θ₀ⁿ)|`, relative to `max(1, |tr(Θ₀ⁿ)|)`.
    pub mass_defect: f64,
}

impl CwReport {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.lambda_min_tr1 > 0.0) {
            v.push(format!("tr Θ₀ not positive (λ_min = {:.3e})", self.lambda_min_tr1));
        }
        if let Some(a) = self.alpha_min {
            if !(a > 0.0) {
                v.push(format!("α not strongly positive (λ_min = {a:.3e})"));
            }
        }
        if let Some(c) = self.cubic_margin {
            if !(c > 0.0) {
                v.push(format!("cubic margin not positive ({c:.3e})"));
            }
        }
        if !(self.eta_margin > 0.0) {
            v.push(format!("η margin not positive (min {:.3e})", self.eta_margin));
        }
        if !(self.mass_defect <= MASS_TOL) {
            v.push(format!("η is not in the class of tr(Θ₀ⁿ) (defect {:.3e})", self.mass_defect));
        }
        v
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

fn require_grid_dim(bundle: &DirectSumBundle, eta: &ScalarField) -> Result<()> {
    if eta.grid().n() != bundle.n() {
        return Err(GmaError::invalid("η grid dimension differs from the bundle's"));
    }
    Ok(())
}

/// Hypothesis margins; `case` must be 1 on surfaces and 2 on threefolds.
pub fn check_cw_hypotheses(bundle: &DirectSumBundle, case: u8, eta: &ScalarField) -> Result<CwReport> {
    require_grid_dim(bundle, eta)?;
    let expected = if bundle.n() == 2 { 1 } else { 2 };
    if case != expected {
        return Err(GmaError::invalid(format!(
            "case {case} does not apply to n = {} (expected case {expected})",
            bundle.n()
        )));
    }
    let tr = curvature_traces(bundle);
    let k = tr.k as f64;
    let top = tr.top_density();
    let mass_defect = (eta.mean() - top).abs() / top.abs().max(1.0);
    let lambda_min_tr1 = tr.tr1.lambda_min();
    if case == 1 {
        let sq = tr.tr1_power_density();
        Ok(CwReport {
            case,
            lambda_min_tr1,
            alpha_min: None,
            cubic_margin: None,
            eta_margin: sq + k * (eta.min() - top),
            base_density: sq / (k * k),
            mass_defect,
        })
    } else {
        let cubic = tr.cubic_margin().expect("threefold traces");
        Ok(CwReport {
            case,
            lambda_min_tr1,
            alpha_min: tr.alpha_dual().map(|a| a.0.lambda_min()),
            cubic_margin: Some(cubic),
            eta_margin: k * k * (eta.min() - top) + cubic,
            base_density: cubic / (k * k * k),
            mass_defect,
        })
    }
}

fn checked(bundle: &DirectSumBundle, case: u8, eta: &ScalarField) -> Result<TraceData> {
    let report = check_cw_hypotheses(bundle, case, eta)?;
    if !report.passed() {
        return Err(GmaError::HypothesisViolation(report.violations().join("; ")));
    }
    Ok(curvature_traces(bundle))
}

/// Surface case: `(ω + ddc φ)² = (η − tr(Θ₀²))/k + tr(Θ₀)²/k²`, `ω = tr(Θ₀)/k`.
pub fn reduce_surface(bundle: &DirectSumBundle, eta: &ScalarField) -> Result<ProblemSpec> {
    if bundle.n() != 2 {
        return Err(GmaError::invalid("reduce_surface needs n = 2"));
    }
    let tr = checked(bundle, 1, eta)?;
    let k = tr.k as f64;
    let top = tr.top_density();
    let sq = tr.tr1_power_density();
    let density = eta.map(|e| ((e - top) / k + sq / (k * k)) / 2.0);
    finish_spec(tr.tr1.scale(1.0 / k), HermForm::zeros(2), density)
}

/// Threefold case: `ω = tr(Θ₀)/k`, `α = 3 tr(Θ₀)²/k² − 3 tr(Θ₀²)/k` and
/// density `(η − tr(Θ₀³))/k − (2 tr(Θ₀)³ − 3k tr(Θ₀)∧tr(Θ₀²))/k³`.
pub fn reduce_threefold(bundle: &DirectSumBundle, eta: &ScalarField) -> Result<ProblemSpec> {
    if bundle.n() != 3 {
        return Err(GmaError::invalid("reduce_threefold needs n = 3"));
    }
    let tr = checked(bundle, 2, eta)?;
    let k = tr.k as f64;
    let top = tr.top_density();
    let cubic = tr.cubic_margin().expect("threefold traces");
    let density = eta.map(|e| ((e - top) / k + cubic / (k * k * k)) / 6.0);
    let a = tr.alpha_dual().expect("threefold traces").coefficient();
    finish_spec(tr.tr1.scale(1.0 / k), a, density)
}

fn finish_spec(g: HermForm, a: HermForm, density: ScalarField) -> Result<ProblemSpec> {
    let spec = ProblemSpec::new(g, a, Forcing::Density(density), 0.0)?;
    let report = check_problem_hypotheses(&spec);
    if !report.is_valid() {
        return Err(GmaError::HypothesisViolation(report.violations().join("; ")));
    }
    Ok(spec)
}

fn summand_densities(bundle: &DirectSumBundle, phi: &ScalarField) -> Result<Vec<f64>> {
    if phi.grid().n() != bundle.n() {
        return Err(GmaError::invalid("phi grid dimension differs from the bundle's"));
    }
    let n = bundle.n();
    let factor = if n == 2 { 2.0 } else { 6.0 };
    let spectral = Spectral::new(phi.grid());
    let comps = spectral.hessian_components(&spectral.forward(phi.values()));
    Ok((0..phi.values().len())
        .map(|p| {
            let h = comps.at(n, p);
            bundle.summands().iter().map(|g| factor * (*g + h).det()).sum()
        })
        .collect())
}

/// Density of `Σᵢ (ωᵢ + ddc φ)ⁿ` by plain collocation.
pub fn reconstruct_top_chern_collocated(bundle: &DirectSumBundle, phi: &ScalarField) -> Result<ScalarField> {
    Ok(ScalarField::from_vec_unchecked(phi.grid().clone(), summand_densities(bundle, phi)?))
}

/// Density of `Σᵢ (ωᵢ + ddc φ)ⁿ` with its mean taken from the exact class
/// integral (the same zero-mode convention as the solver residual).
pub fn reconstruct_top_chern(bundle: &DirectSumBundle, phi: &ScalarField) -> Result<ScalarField> {
    let mut v = summand_densities(bundle, phi)?;
    let top = curvature_traces(bundle).top_density();
    let shift = top - pairwise_sum(&v) / v.len() as f64;
    v.iter_mut().for_each(|x| *x += shift);
    Ok(ScalarField::from_vec_unchecked(phi.grid().clone(), v))
}

pub const CHERN_SUP_TOL: f64 = 1e-8;
pub const CHERN_INTEGRAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernReport {
    /// `sup |tr(Θⁿ) − η|`.
    pub sup_defect: f64,
    /// `|∫ tr(Θⁿ) − ∫ tr(Θ₀ⁿ)|` by grid quadrature of the collocated
    /// reconstruction, relative to `max(1, |∫ tr(Θ₀ⁿ)|)`.
    pub integral_defect: f64,
    /// `|∫ η − ∫ tr(Θ₀ⁿ)|`, same normalisation.
    pub class_defect: f64,
}

impl ChernReport {
    pub fn passed(&self) -> bool {
        self.sup_defect <= CHERN_SUP_TOL && self.integral_defect <= CHERN_INTEGRAL_TOL
    }
}

pub fn verify_chern(bundle: &DirectSumBundle, phi: &ScalarField, eta: &ScalarField) -> Result<ChernReport> {
    if phi.grid() != eta.grid() {
        return Err(GmaError::invalid("phi and η grids differ"));
    }
    let top = curvature_traces(bundle).top_density();
    let scale = top.abs().max(1.0);
    let collocated = reconstruct_top_chern_collocated(bundle, phi)?;
    let conservative = reconstruct_top_chern(bundle, phi)?;
    Ok(ChernReport {
        sup_defect: conservative.distance(eta),
        integral_defect: (collocated.mean() - top).abs() / scale,
        class_defect: (eta.mean() - top).abs() / scale,
    })
}

/// `η = tr(Θ₀ⁿ) + ε·g` for a perturbation `g` (made mean-zero here).
pub fn perturbed_eta(bundle: &DirectSumBundle, grid: &GridSpec, epsilon: f64, g: &ScalarField) -> Result<ScalarField> {
    if g.grid() != grid || grid.n() != bundle.n() {
        return Err(GmaError::invalid("perturbation grid mismatch"));
    }
    let top = curvature_traces(bundle).top_density();
    Ok(g.project_mean_zero().map(|v| top + epsilon * v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bundle() -> DirectSumBundle {
        DirectSumBundle::new(vec![
            HermForm::identity(3),
            HermForm::diag(&[0.0, 3.0, 1.0]),
            HermForm::diag(&[0.0, 0.0, 2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn traces_of_three_bundle_example() {
        let tr = curvature_traces(&three_bundle());
        assert_eq!(tr.tr1, HermForm::diag(&[1.0, 4.0, 4.0]));
        assert_eq!(tr.tr2_dual.unwrap().0, HermForm::diag(&[8.0, 2.0, 2.0]));
        assert_eq!(tr.tr3_density, Some(6.0));
        assert!((tr.cubic_margin().unwrap() - 24.0).abs() < 1e-12);
        let a = tr.alpha_dual().unwrap().0;
        assert!((a - HermForm::diag(&[8.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0])).max_abs() < 1e-14);
    }

    #[test]
    fn flat_and_repeated_summands() {
        let flat = DirectSumBundle::new(vec![HermForm::zeros(3)]).unwrap();
        let tr = curvature_traces(&flat);
        assert_eq!(tr.tr1.max_abs(), 0.0);
        assert_eq!(tr.tr2_dual.unwrap().0.max_abs(), 0.0);
        assert_eq!(tr.tr3_density, Some(0.0));

        let g = HermForm::from_real(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.1], vec![0.0, 0.1, 1.5]]).unwrap();
        let rep = DirectSumBundle::new(vec![g; 4]).unwrap();
        let tr = curvature_traces(&rep);
        assert!((tr.tr1 - g.scale(4.0)).max_abs() < 1e-14);
        assert!((tr.tr3_density.unwrap() - 24.0 * g.det()).abs() < 1e-12);
    }

    #[test]
    fn rank_one_fails_strong_positivity() {
        let b = DirectSumBundle::new(vec![HermForm::identity(3)]).unwrap();
        let grid = GridSpec::uniform(3, 2).unwrap();
        let eta = ScalarField::constant(&grid, 6.0);
        let rep = check_cw_hypotheses(&b, 2, &eta).unwrap();
        assert_eq!(rep.alpha_min, Some(0.0));
        assert!(!rep.passed());
        assert!(matches!(reduce_threefold(&b, &eta), Err(GmaError::HypothesisViolation(_))));
        assert!(check_cw_hypotheses(&b, 1, &eta).is_err());
    }

    #[test]
    fn unperturbed_threefold_reduction() {
        let grid = GridSpec::uniform(3, 2).unwrap();
        let b = three_bundle();
        let eta = ScalarField::constant(&grid, 6.0);
        let rep = check_cw_hypotheses(&b, 2, &eta).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations());
        // 6·det(ω) − α∧ω for ω = diag(1,4,4)/3
        assert!((rep.base_density - 8.0 / 9.0).abs() < 1e-14);
        let spec = reduce_threefold(&b, &eta).unwrap();
        let Forcing::Density(d) = &spec.forcing else { panic!() };
        assert!(d.distance(&ScalarField::constant(&grid, 4.0 / 27.0)) < 1e-15);
        assert!((crate::solver::base_density(&spec).unwrap() - 4.0 / 27.0).abs() < 1e-15);

        let low = ScalarField::constant(&grid, 5.0);
        let rep = check_cw_hypotheses(&b, 2, &low).unwrap();
        assert!(rep.mass_defect > 0.1);
        assert!(reduce_threefold(&b, &low).is_err());
    }

    #[test]
    fn negative_eta_margin_is_reported() {
        let grid = GridSpec::new(3, vec![4, 2, 2, 2, 2, 2]).unwrap();
        let b = three_bundle();
        let g = ScalarField::from_fn(&grid, |x| (std::f64::consts::TAU * x[0]).cos());
        let eta = perturbed_eta(&b, &grid, 5.0, &g).unwrap();
        let rep = check_cw_hypotheses(&b, 2, &eta).unwrap();
        assert!(rep.eta_margin < 0.0);
        assert!(!rep.passed());
    }

    #[test]
    fn bundle_file_round_trip() {
        let b = three_bundle();
        let file = BundleFile::from(&b);
        let text = serde_json::to_string(&file).unwrap();
        let back: BundleFile = serde_json::from_str(&text).unwrap();
        assert_eq!(DirectSumBundle::try_from(&back).unwrap(), b);
        let bad = BundleFile { n: 2, ..file.clone() };
        assert!(DirectSumBundle::try_from(&bad).is_err());
        let wrong_rank = BundleFile { k: Some(2), ..file };
        assert!(DirectSumBundle::try_from(&wrong_rank).is_err());
    }

    #[test]
    fn zero_phi_reconstructs_trace() {
        let grid = GridSpec::uniform(2, 4).unwrap();
        let b = DirectSumBundle::new(vec![HermForm::diag(&[2.0, 2.0]), HermForm::diag(&[1.0, -1.0])]).unwrap();
        let r = reconstruct_top_chern(&b, &ScalarField::zeros(&grid)).unwrap();
        assert!(r.distance(&ScalarField::constant(&grid, 6.0)) < 1e-15);
    }
}
