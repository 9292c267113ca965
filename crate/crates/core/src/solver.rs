//! Residual, linearisation, Newton iteration and continuity path for
//!
//! ```text
//! det(g + Hφ) − tr(A·(g + Hφ)) = f,      Hφ = complex Hessian of φ,
//! ```
//!
//! the density form of `ω_φ³ − α∧ω_φ = η` (densities are top forms divided
//! by `6·vol` on ℂ³ and by `2·vol` on ℂ², so `ω³ = det(g)`). On ℂ² the
//! coefficient `A` is zero and the equation is the complex Monge–Ampère
//! equation.
//!
//! Zero mode. The integral of the left-hand side equals
//! `f₀ = det(g) − tr(A·g)` for every periodic `φ`. Grid quadrature of the
//! pointwise products reproduces that exactly for the quadratic terms but
//! not for the cubic `det(Hφ)`, whose aliased modes leak into the mean. The
//! discrete operator therefore takes its pointwise values from collocation
//! and its mean from the exact integral:
//! `T_N(φ) = T(φ) − mean(T(φ)) + f₀`. The quadrature defect is reported in
//! [`SolveResult::zero_mode_defect`].

use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::forms::{cone_margins, ConeMargins};
use crate::grid::{band_limited_random, pairwise_sum, sup_norm, GridSpec, ScalarField, Spectral};
use crate::herm::HermForm;
use crate::krylov::{gmres, GmresSettings};

/// Right-hand side data of a problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Forcing {
    /// Driving function `F`: the target density is `e^F·f₀` up to the
    /// normalising constant.
    Driving(ScalarField),
    /// Target density `η` directly (same units as `f₀`); must be positive
    /// with mean `f₀`.
    Density(ScalarField),
}

impl Forcing {
    pub fn field(&self) -> &ScalarField {
        match self {
            Forcing::Driving(f) | Forcing::Density(f) => f,
        }
    }
}

/// Data of one solve on the unit-lattice torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    /// Constant metric matrix of `ω`.
    pub g: HermForm,
    /// Coefficient matrix `A = dual(α)/6` (zero on ℂ²).
    pub a: HermForm,
    pub forcing: Forcing,
    /// Required margin in `α ≥ ε̃ ω∧ω`.
    pub epsilon_tilde: f64,
}

impl ProblemSpec {
    pub fn new(g: HermForm, a: HermForm, forcing: Forcing, epsilon_tilde: f64) -> Result<Self> {
        let n = g.n();
        if a.n() != n || forcing.field().grid().n() != n {
            return Err(GmaError::invalid("g, A and the forcing grid must share dimension"));
        }
        if n == 2 && a.max_abs() != 0.0 {
            return Err(GmaError::invalid("A must vanish on ℂ²"));
        }
        if !(epsilon_tilde >= 0.0) {
            return Err(GmaError::invalid("epsilon_tilde must be non-negative"));
        }
        Ok(Self { g, a, forcing, epsilon_tilde })
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn grid(&self) -> &GridSpec {
        self.forcing.field().grid()
    }

    /// `det(g) − tr(A·g)` without validation.
    pub fn raw_base_density(&self) -> f64 {
        self.g.det() - self.a.trace_product(&self.g)
    }

    /// `log(density/f₀)` for the continuity family.
    pub fn log_density(&self) -> Result<ScalarField> {
        match &self.forcing {
            Forcing::Driving(f) => Ok(f.clone()),
            Forcing::Density(eta) => {
                let f0 = base_density(self)?;
                if eta.min() <= 0.0 {
                    return Err(GmaError::HypothesisViolation("density must be positive".into()));
                }
                Ok(eta.map(|v| (v / f0).ln()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSettings {
    /// Sup-norm target relative to `f₀`.
    pub residual_tol: f64,
    pub max_iters: usize,
    pub krylov_tol: f64,
    pub max_krylov: usize,
    pub min_damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { residual_tol: 1e-10, max_iters: 30, krylov_tol: 1e-12, max_krylov: 500, min_damping: 1e-3 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.residual_tol > 0.0
            && self.max_iters > 0
            && self.krylov_tol > 0.0
            && self.max_krylov > 0
            && self.min_damping > 0.0
            && self.min_damping <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(GmaError::invalid("Newton settings must be positive (min_damping ≤ 1)"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuitySettings {
    pub dt_initial: f64,
    pub dt_min: f64,
    pub newton: NewtonSettings,
}

impl Default for ContinuitySettings {
    fn default() -> Self {
        Self { dt_initial: 0.1, dt_min: 1e-4, newton: NewtonSettings::default() }
    }
}

impl ContinuitySettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.dt_min && self.dt_min <= self.dt_initial && self.dt_initial <= 1.0) {
            return Err(GmaError::invalid("need 0 < dt_min ≤ dt_initial ≤ 1"));
        }
        self.newton.validate()
    }
}

/// One accepted Newton iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: f64,
    pub iteration: usize,
    /// Sup-norm residual (absolute).
    pub residual: f64,
    /// Grid minima of the cone margins at this iterate.
    pub cone: ConeMargins,
    /// Damping factor of the step that produced this iterate (0 for the start).
    pub damping: f64,
    pub krylov_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeRecord {
    pub t: f64,
    pub cone: ConeMargins,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub phi: ScalarField,
    pub residual_history: Vec<IterationRecord>,
    pub cone_report: Vec<ConeRecord>,
    pub t_path: Vec<f64>,
    pub f0: f64,
    pub final_residual: f64,
    /// `mean(T(φ)) − f₀` by grid quadrature at the final iterate.
    pub zero_mode_defect: f64,
    pub rejected_steps: usize,
    pub newton_iterations: usize,
    pub krylov_iterations: usize,
    pub elapsed_seconds: f64,
}

impl SolveResult {
    /// Residual history restricted to one continuity parameter.
    pub fn history_at(&self, t: f64) -> Vec<&IterationRecord> {
        self.residual_history.iter().filter(|r| r.t == t).collect()
    }
}

/// `f₀ = det(g) − tr(A·g)`, the constant density of `ω³ − α∧ω`.
pub fn base_density(spec: &ProblemSpec) -> Result<f64> {
    let f0 = spec.raw_base_density();
    if f0 > 0.0 {
        Ok(f0)
    } else {
        Err(GmaError::HypothesisViolation(format!("ω³ − α∧ω must be positive, base density is {f0}")))
    }
}

/// Numerical margins of the solvability hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub lambda_min_g: f64,
    /// `λ_min(A)`; `None` on ℂ².
    pub alpha_positivity: Option<f64>,
    /// `λ_min(A − (ε̃/3)·adj(g))`, i.e. `α − ε̃ω∧ω` in coefficient form.
    pub strong_positivity_margin: Option<f64>,
    pub f0: f64,
    /// Minimum over the grid of the target density at `t = 1`.
    pub eta_min: f64,
    /// `|mean(η) − f₀| / f₀` (zero for driving-function input).
    pub mass_defect: f64,
}

pub const MASS_TOL: f64 = 1e-10;

impl HypothesisReport {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.lambda_min_g > 0.0) {
            v.push(format!("g not positive definite (λ_min = {:.3e})", self.lambda_min_g));
        }
        if let Some(a) = self.alpha_positivity {
            if !(a > 0.0) {
                v.push(format!("α not strictly positive (λ_min(A) = {a:.3e})"));
            }
        }
        if let Some(m) = self.strong_positivity_margin {
            if !(m >= 0.0) {
                v.push(format!("α ≥ ε̃ ω∧ω fails (margin {m:.3e})"));
            }
        }
        if !(self.f0 > 0.0) {
            v.push(format!("ω³ − α∧ω not positive (f₀ = {:.3e})", self.f0));
        }
        if !(self.eta_min > 0.0) {
            v.push(format!("target density not positive (min {:.3e})", self.eta_min));
        }
        if !(self.mass_defect <= MASS_TOL) {
            v.push(format!("mass constraint defect {:.3e}", self.mass_defect));
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

pub fn check_problem_hypotheses(spec: &ProblemSpec) -> HypothesisReport {
    let n = spec.n();
    let f0 = spec.raw_base_density();
    let (alpha_positivity, strong) = if n == 3 {
        let excess = spec.a - spec.g.adjugate().scale(spec.epsilon_tilde / 3.0);
        (Some(spec.a.lambda_min()), Some(excess.lambda_min()))
    } else {
        (None, None)
    };
    let (eta_min, mass_defect) = match &spec.forcing {
        Forcing::Driving(f) => {
            // e^{F} f₀ / mean(e^{F}) is positive whenever f₀ is
            let e = f.map(f64::exp);
            (f0 * e.min() / e.mean(), 0.0)
        }
        Forcing::Density(eta) => (eta.min(), ((eta.mean() - f0) / f0).abs()),
    };
    HypothesisReport {
        n,
        lambda_min_g: spec.g.lambda_min(),
        alpha_positivity,
        strong_positivity_margin: strong,
        f0,
        eta_min,
        mass_defect,
    }
}

/// Discrete operator bound to one problem.
pub(crate) struct Operator<'a> {
    spec: &'a ProblemSpec,
    spectral: Spectral,
    f0: f64,
}

/// Everything derived from one iterate.
pub(crate) struct State {
    pub phi: Vec<f64>,
    /// `g + Hφ` per point.
    pub total: Vec<HermForm>,
    /// Pointwise `det − tr(A·)` before the zero-mode correction.
    pub raw: Vec<f64>,
    /// `T_N(φ) − rhs`.
    pub residual: Vec<f64>,
    pub residual_sup: f64,
}

impl<'a> Operator<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Result<Self> {
        let f0 = base_density(spec)?;
        Ok(Self { spec, spectral: Spectral::new(spec.grid()), f0 })
    }

    pub fn total_hessian(&self, phi: &[f64]) -> Vec<HermForm> {
        let n = self.spec.n();
        let comps = self.spectral.hessian_components(&self.spectral.forward(phi));
        (0..phi.len()).map(|p| self.spec.g + comps.at(n, p)).collect()
    }

    pub fn evaluate(&self, phi: Vec<f64>, rhs: &[f64]) -> State {
        let total = self.total_hessian(&phi);
        let a = &self.spec.a;
        let raw: Vec<f64> = total.iter().map(|h| h.det() - a.trace_product(h)).collect();
        let shift = self.f0 - pairwise_sum(&raw) / raw.len() as f64;
        let residual: Vec<f64> = raw.iter().zip(rhs).map(|(&t, &f)| t + shift - f).collect();
        let residual_sup = sup_norm(&residual);
        State { phi, total, raw, residual, residual_sup }
    }

    pub fn margins(&self, total: &[HermForm]) -> ConeMargins {
        total.iter().fold(ConeMargins::infinite(), |acc, h| acc.meet(&cone_margins(h, &self.spec.a)))
    }

    /// `c_t e^{tF} f₀` with `c_t = 1/mean(e^{tF})`.
    pub fn rhs(&self, log_density: &ScalarField, t: f64) -> Vec<f64> {
        let e: Vec<f64> = log_density.values().iter().map(|&v| (t * v).exp()).collect();
        let c = e.len() as f64 / pairwise_sum(&e);
        e.into_iter().map(|v| self.f0 * c * v).collect()
    }

    /// Coefficient field `L = adj(g + Hφ) − A`.
    pub fn linearization(&self, total: &[HermForm]) -> Vec<HermForm> {
        total.iter().map(|h| h.adjugate() - self.spec.a).collect()
    }

    /// `tr(L·Hδ)` with its (exactly vanishing) mean removed.
    pub fn apply_linearization(&self, l: &[HermForm], delta: &[f64], out: &mut [f64]) {
        let comps = self.spectral.hessian_components(&self.spectral.forward(delta));
        comps.trace_against(l, out);
        let m = pairwise_sum(out) / out.len() as f64;
        out.iter_mut().for_each(|v| *v -= m);
    }

    /// Newton iteration at continuity parameter `t`; appends accepted
    /// iterates to `history`.
    pub fn newton(
        &self,
        rhs: &[f64],
        phi0: Vec<f64>,
        settings: &NewtonSettings,
        t: f64,
        history: &mut Vec<IterationRecord>,
    ) -> Result<(State, usize, usize)> {
        let target = settings.residual_tol * self.f0;
        let mut state = self.evaluate(phi0, rhs);
        let start_margins = self.margins(&state.total);
        if !start_margins.all_positive() {
            return Err(GmaError::invalid(format!("initial guess outside the cone (margins {start_margins:?})")));
        }
        history.push(IterationRecord {
            t,
            iteration: 0,
            residual: state.residual_sup,
            cone: start_margins,
            damping: 0.0,
            krylov_iterations: 0,
        });
        let mut krylov_total = 0;
        let len = rhs.len();
        for iter in 1..=settings.max_iters + 1 {
            if state.residual_sup <= target {
                return Ok((state, iter - 1, krylov_total));
            }
            if iter > settings.max_iters {
                break;
            }
            let l = self.linearization(&state.total);
            let lbar = mean_form(&l);
            let sym = self.spectral.constant_coeff_symbol(&lbar);
            let mut b: Vec<f64> = state.residual.iter().map(|v| -v).collect();
            let mb = pairwise_sum(&b) / len as f64;
            b.iter_mut().for_each(|v| *v -= mb);
            let mut delta = vec![0.0; len];
            let gs = GmresSettings { tol: settings.krylov_tol, max_iters: settings.max_krylov, restart: 40 };
            let stats = gmres(
                |x, y| self.apply_linearization(&l, x, y),
                |x, y| y.copy_from_slice(&self.spectral.solve_symbol(&sym, x).0),
                &b,
                &mut delta,
                &gs,
            )?;
            krylov_total += stats.iterations;

            let mut damping = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = state.phi.iter().zip(&delta).map(|(p, d)| p + damping * d).collect();
                let trial = project(trial);
                let candidate = self.evaluate(trial, rhs);
                if candidate.residual_sup < state.residual_sup {
                    let m = self.margins(&candidate.total);
                    if m.all_positive() {
                        break Some((candidate, m));
                    }
                }
                damping *= 0.5;
                if damping < settings.min_damping {
                    break None;
                }
            };
            let Some((next, m)) = accepted else {
                return Err(GmaError::StepFailure {
                    t,
                    reason: format!(
                        "no damping ≥ {:.1e} keeps the iterate in the cone with a smaller residual (residual {:.3e})",
                        settings.min_damping, state.residual_sup
                    ),
                });
            };
            state = next;
            history.push(IterationRecord {
                t,
                iteration: iter,
                residual: state.residual_sup,
                cone: m,
                damping,
                krylov_iterations: stats.iterations,
            });
        }
        Err(GmaError::NonConvergence { iterations: settings.max_iters, residual: state.residual_sup })
    }
}

fn mean_form(l: &[HermForm]) -> HermForm {
    let n = l[0].n();
    let len = l.len() as f64;
    let mut acc = HermForm::zeros(n);
    for h in l {
        acc = acc + *h;
    }
    acc.scale(1.0 / len)
}

fn project(mut v: Vec<f64>) -> Vec<f64> {
    let m = pairwise_sum(&v) / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
    v
}

fn check_grid(spec: &ProblemSpec, f: &ScalarField, what: &str) -> Result<()> {
    if f.grid() != spec.grid() {
        return Err(GmaError::invalid(format!("{what} grid does not match the problem grid")));
    }
    Ok(())
}

/// Pointwise `det(g + Hφ) − tr(A·(g + Hφ))` by plain collocation.
pub fn operator_density(phi: &ScalarField, spec: &ProblemSpec) -> Result<ScalarField> {
    check_grid(spec, phi, "phi")?;
    let op = Operator { spec, spectral: Spectral::new(spec.grid()), f0: spec.raw_base_density() };
    let total = op.total_hessian(phi.values());
    let a = &spec.a;
    Ok(ScalarField::from_vec_unchecked(
        spec.grid().clone(),
        total.iter().map(|h| h.det() - a.trace_product(h)).collect(),
    ))
}

/// [`operator_density`] and [`field_cone_margins`] from one Hessian.
pub fn density_and_margins(phi: &ScalarField, spec: &ProblemSpec) -> Result<(ScalarField, ConeMargins)> {
    check_grid(spec, phi, "phi")?;
    let op = Operator { spec, spectral: Spectral::new(spec.grid()), f0: spec.raw_base_density() };
    let total = op.total_hessian(phi.values());
    let a = &spec.a;
    let density = total.iter().map(|h| h.det() - a.trace_product(h)).collect();
    Ok((ScalarField::from_vec_unchecked(spec.grid().clone(), density), op.margins(&total)))
}

/// `T_N(φ) − rhs` (see the module docs for the zero-mode convention).
pub fn residual(phi: &ScalarField, spec: &ProblemSpec, rhs: &ScalarField) -> Result<ScalarField> {
    check_grid(spec, phi, "phi")?;
    check_grid(spec, rhs, "rhs")?;
    let op = Operator { spec, spectral: Spectral::new(spec.grid()), f0: spec.raw_base_density() };
    let state = op.evaluate(phi.values().to_vec(), rhs.values());
    Ok(ScalarField::from_vec_unchecked(spec.grid().clone(), state.residual))
}

/// Target density of the continuity family at `t`.
pub fn rhs_at(spec: &ProblemSpec, t: f64) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GmaError::invalid("t must lie in [0, 1]"));
    }
    let op = Operator::new(spec)?;
    let log_density = spec.log_density()?;
    Ok(ScalarField::from_vec_unchecked(spec.grid().clone(), op.rhs(&log_density, t)))
}

/// `tr(L(x)·Hδ(x))` with `L = adj(g + Hφ) − A`, the derivative of
/// [`residual`] in the direction `δ`.
pub fn linearized_apply(phi: &ScalarField, delta: &ScalarField, spec: &ProblemSpec) -> Result<ScalarField> {
    check_grid(spec, phi, "phi")?;
    check_grid(spec, delta, "delta")?;
    let op = Operator { spec, spectral: Spectral::new(spec.grid()), f0: spec.raw_base_density() };
    let l = op.linearization(&op.total_hessian(phi.values()));
    let mut out = vec![0.0; phi.values().len()];
    op.apply_linearization(&l, delta.values(), &mut out);
    Ok(ScalarField::from_vec_unchecked(spec.grid().clone(), out))
}

/// Grid minima of the cone margins of `g + Hφ`.
pub fn field_cone_margins(phi: &ScalarField, spec: &ProblemSpec) -> Result<ConeMargins> {
    check_grid(spec, phi, "phi")?;
    let op = Operator { spec, spectral: Spectral::new(spec.grid()), f0: spec.raw_base_density() };
    Ok(op.margins(&op.total_hessian(phi.values())))
}

fn finish(
    op: &Operator,
    state: State,
    history: Vec<IterationRecord>,
    cone_report: Vec<ConeRecord>,
    t_path: Vec<f64>,
    rejected_steps: usize,
    krylov_iterations: usize,
    started: Instant,
) -> SolveResult {
    let grid = op.spec.grid().clone();
    let zero_mode_defect = pairwise_sum(&state.raw) / state.raw.len() as f64 - op.f0;
    let newton_iterations = history.iter().filter(|r| r.iteration > 0).count();
    SolveResult {
        phi: ScalarField::from_vec_unchecked(grid, state.phi),
        residual_history: history,
        cone_report,
        t_path,
        f0: op.f0,
        final_residual: state.residual_sup,
        zero_mode_defect,
        rejected_steps,
        newton_iterations,
        krylov_iterations,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Damped Newton from `phi0` for the given right-hand side.
pub fn newton_solve(
    spec: &ProblemSpec,
    rhs: &ScalarField,
    phi0: &ScalarField,
    settings: &NewtonSettings,
) -> Result<SolveResult> {
    settings.validate()?;
    check_grid(spec, rhs, "rhs")?;
    check_grid(spec, phi0, "phi0")?;
    let started = Instant::now();
    let op = Operator::new(spec)?;
    let mut history = Vec::new();
    let (state, _, krylov) = op.newton(rhs.values(), project(phi0.values().to_vec()), settings, 1.0, &mut history)?;
    let cone = op.margins(&state.total);
    Ok(finish(&op, state, history, vec![ConeRecord { t: 1.0, cone }], vec![1.0], 0, krylov, started))
}

/// Follows the continuity family from `t = 0` (where `φ = 0`) to `t = 1`.
pub fn continuity_solve(spec: &ProblemSpec, settings: &ContinuitySettings) -> Result<SolveResult> {
    settings.validate()?;
    let report = check_problem_hypotheses(spec);
    if !report.is_valid() {
        return Err(GmaError::HypothesisViolation(report.violations().join("; ")));
    }
    let started = Instant::now();
    let op = Operator::new(spec)?;
    let log_density = spec.log_density()?;
    let len = spec.grid().len();

    let mut history = Vec::new();
    let mut phi = vec![0.0; len];
    let first = op.evaluate(phi.clone(), &op.rhs(&log_density, 0.0));
    let mut cone_report = vec![ConeRecord { t: 0.0, cone: op.margins(&first.total) }];
    let mut t_path = vec![0.0];
    let mut t = 0.0;
    let mut rejected = 0;
    let mut krylov = 0;
    let mut last_state = first;

    // a constant F leaves the target density fixed along the path
    let spread = log_density.max() - log_density.min();
    let mut dt = if spread == 0.0 { 1.0 } else { settings.dt_initial };

    while t < 1.0 {
        let t_next = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        let rhs = op.rhs(&log_density, t_next);
        let mut attempt = Vec::new();
        match op.newton(&rhs, phi.clone(), &settings.newton, t_next, &mut attempt) {
            Ok((state, iters, k)) => {
                krylov += k;
                history.extend(attempt);
                phi = state.phi.clone();
                cone_report.push(ConeRecord { t: t_next, cone: op.margins(&state.total) });
                last_state = state;
                t = t_next;
                t_path.push(t);
                if iters <= 3 {
                    dt = (2.0 * dt).min(settings.dt_initial.max(dt));
                }
            }
            Err(GmaError::StepFailure { .. } | GmaError::NonConvergence { .. } | GmaError::LinearSolve { .. }) => {
                rejected += 1;
                dt *= 0.5;
                if dt < settings.dt_min {
                    return Err(GmaError::PathFailure {
                        last_t: t,
                        dt_min: settings.dt_min,
                        last_phi: Box::new(ScalarField::from_vec_unchecked(spec.grid().clone(), phi)),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(finish(&op, last_state, history, cone_report, t_path, rejected, krylov, started))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// Sup-norm distance between the two mean-zero solutions.
    pub distance: Option<f64>,
    pub perturbation_amplitude: f64,
    pub newton_iterations: usize,
    pub error: Option<String>,
}

/// Re-solves at `t = 1` from `φ + ψ` (ψ band-limited random, shrunk until the
/// start is in the cone) and measures the distance between the solutions.
pub fn verify_uniqueness(
    spec: &ProblemSpec,
    result: &SolveResult,
    seed: u64,
    settings: &NewtonSettings,
) -> UniquenessReport {
    let grid = spec.grid();
    let limit = grid.sizes().iter().min().copied().unwrap_or(2) / 2 - 1;
    let mut amplitude = (0.5 * result.phi.sup_norm()).max(1e-2);
    let fail = |amplitude: f64, msg: String| UniquenessReport {
        distance: None,
        perturbation_amplitude: amplitude,
        newton_iterations: 0,
        error: Some(msg),
    };
    let mut run = || -> Result<UniquenessReport> {
        let base = band_limited_random(grid, seed, limit.min(2), 1.0)?;
        let mut start = None;
        for _ in 0..40 {
            let candidate = result.phi.axpy(amplitude, &base);
            if field_cone_margins(&candidate, spec)?.all_positive() {
                start = Some(candidate);
                break;
            }
            amplitude *= 0.5;
        }
        let Some(start) = start else {
            return Ok(fail(amplitude, "no admissible perturbation found".into()));
        };
        let rhs = rhs_at(spec, 1.0)?;
        let other = newton_solve(spec, &rhs, &start, settings)?;
        Ok(UniquenessReport {
            distance: Some(other.phi.project_mean_zero().distance(&result.phi.project_mean_zero())),
            perturbation_amplitude: amplitude,
            newton_iterations: other.newton_iterations,
            error: None,
        })
    };
    run().unwrap_or_else(|e| fail(amplitude, e.to_string()))
}
