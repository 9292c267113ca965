use std::f64::consts::PI;

use gma_core::chern_weil::{
    check_cw_hypotheses, curvature_traces, perturbed_eta, reconstruct_top_chern, reduce_surface, reduce_threefold,
    verify_chern, BundleFile, ChernReport, CwReport, DirectSumBundle,
};
use gma_core::grid::band_limited_random;
use gma_core::herm::HermFormRepr;
use gma_core::io::{read_scalar_field, SliceSpec};
use gma_core::lemmas::{corrupted_adjugate, run_all, AdjugateFn, SuiteReport};
use gma_core::oracle::separable_oracle;
use gma_core::solver::{check_problem_hypotheses, continuity_solve, ConeRecord, HypothesisReport, IterationRecord};
use gma_core::{Forcing, GmaError, GridSpec, HermForm, ProblemSpec, ScalarField, SolveResult};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{Command, ForcingKind, ForcingSource, RunConfig};
use crate::exit::{classify, CliError, ExitCode};

/// Sup-norm agreement required between a solve and the separable oracle.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Serialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sup: f64,
    pub rms: f64,
}

impl FieldStats {
    pub fn of(f: &ScalarField) -> Self {
        let rms = (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt();
        Self { min: f.min(), max: f.max(), mean: f.mean(), sup: f.sup_norm(), rms }
    }
}

#[derive(Serialize)]
struct ProblemSummary {
    n: usize,
    sizes: Vec<usize>,
    g: HermFormRepr,
    a: HermFormRepr,
    epsilon_tilde: f64,
    forcing: &'static str,
}

impl ProblemSummary {
    fn of(spec: &ProblemSpec) -> Self {
        Self {
            n: spec.n(),
            sizes: spec.grid().sizes().to_vec(),
            g: HermFormRepr::from(&spec.g),
            a: HermFormRepr::from(&spec.a),
            epsilon_tilde: spec.epsilon_tilde,
            forcing: match spec.forcing {
                Forcing::Driving(_) => "driving",
                Forcing::Density(_) => "density",
            },
        }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    f0: f64,
    final_residual: f64,
    zero_mode_defect: f64,
    newton_iterations: usize,
    krylov_iterations: usize,
    rejected_steps: usize,
    t_path: Vec<f64>,
    residual_history: Vec<IterationRecord>,
    cone_report: Vec<ConeRecord>,
    phi: FieldStats,
}

impl SolveSummary {
    fn of(r: &SolveResult) -> Self {
        Self {
            f0: r.f0,
            final_residual: r.final_residual,
            zero_mode_defect: r.zero_mode_defect,
            newton_iterations: r.newton_iterations,
            krylov_iterations: r.krylov_iterations,
            rejected_steps: r.rejected_steps,
            t_path: r.t_path.clone(),
            residual_history: r.residual_history.clone(),
            cone_report: r.cone_report.clone(),
            phi: FieldStats::of(&r.phi),
        }
    }
}

#[derive(Serialize)]
struct OracleComparison {
    sup_difference: f64,
    tolerance: f64,
    passed: bool,
    oracle: FieldStats,
}

#[derive(Serialize)]
struct Failure {
    stage: &'static str,
    exit_code: u8,
    message: String,
    /// Last continuity parameter reached (path failures only).
    last_t: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    command: &'static str,
    seed: u64,
    status: &'static str,
    problem: ProblemSummary,
    hypotheses: HypothesisReport,
    violations: Vec<String>,
    solve: Option<SolveSummary>,
    oracle: Option<OracleComparison>,
    failure: Option<Failure>,
}

pub fn run(command: Command, config: &RunConfig, out: &mut Artifacts) -> Result<ExitCode, CliError> {
    match command {
        Command::Solve => solve(config, out, false),
        Command::Oracle => solve(config, out, true),
        Command::VerifyLemmas => verify_lemmas(config, out),
        Command::ChernWeil => chern_weil(config, out),
        Command::Export => export(config, out),
    }
}

fn forcing_field(config: &RunConfig, grid: &GridSpec) -> Result<ScalarField, CliError> {
    let f = &config.problem.forcing;
    let n = grid.n();
    Ok(match f.source {
        ForcingSource::Zero => ScalarField::zeros(grid),
        ForcingSource::Constant => ScalarField::constant(grid, f.value),
        ForcingSource::BandLimited => band_limited_random(grid, config.seed, f.max_mode, f.amplitude)?,
        ForcingSource::Separable => {
            ScalarField::from_fn(grid, |x| f.amplitude * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[n]).cos())
        }
        ForcingSource::File => {
            let path = f.path.as_ref().expect("validated");
            let field =
                read_scalar_field(path).map_err(|e| CliError::io(format!("forcing file {}: {e}", path.display())))?;
            if field.grid() != grid {
                return Err(CliError::config(format!(
                    "forcing file grid {:?} differs from grid.sizes {:?}",
                    field.grid().sizes(),
                    grid.sizes()
                )));
            }
            field
        }
    })
}

pub fn problem_spec(config: &RunConfig) -> Result<ProblemSpec, CliError> {
    let grid = config.grid.spec()?;
    let (g, a) = config.problem.matrices(grid.n())?;
    let field = forcing_field(config, &grid)?;
    let forcing = match config.problem.forcing.kind {
        ForcingKind::Driving => Forcing::Driving(field),
        ForcingKind::Density => Forcing::Density(field),
    };
    Ok(ProblemSpec::new(g, a, forcing, config.problem.epsilon_tilde)?)
}

fn failure(stage: &'static str, e: &GmaError) -> Failure {
    let last_t = match e {
        GmaError::PathFailure { last_t, .. } => Some(*last_t),
        GmaError::StepFailure { t, .. } => Some(*t),
        _ => None,
    };
    Failure { stage, exit_code: classify(e).code(), message: e.to_string(), last_t }
}

fn solve(config: &RunConfig, out: &mut Artifacts, with_oracle: bool) -> Result<ExitCode, CliError> {
    let spec = problem_spec(config)?;
    let hyp = check_problem_hypotheses(&spec);
    let command = if with_oracle { "oracle" } else { "solve" };
    let mut report = SolveReport {
        command,
        seed: config.seed,
        status: "hypothesis-failure",
        problem: ProblemSummary::of(&spec),
        violations: hyp.violations(),
        hypotheses: hyp,
        solve: None,
        oracle: None,
        failure: None,
    };
    if !report.violations.is_empty() {
        for v in &report.violations {
            eprintln!("hypothesis: {v}");
        }
        out.write_json("report.json", &report)?;
        return Ok(ExitCode::HypothesisFailure);
    }
    let oracle = if with_oracle || config.problem.forcing.source == ForcingSource::Separable {
        Some(out.time("oracle", || separable_oracle(&spec))?)
    } else {
        None
    };
    let result = out.time("solve", || continuity_solve(&spec, &config.settings));
    let res = match result {
        Ok(r) => r,
        Err(e) => {
            let code = classify(&e);
            if let GmaError::PathFailure { last_t, last_phi, .. } = &e {
                eprintln!("path failure: last good t = {last_t}");
                out.write_field("phi_last_good.bin", last_phi, &format!("last solved iterate, t = {last_t}"))?;
            }
            report.status = if code == ExitCode::PathFailure { "path-failure" } else { "error" };
            report.failure = Some(failure("solve", &e));
            out.write_json("report.json", &report)?;
            return Ok(code);
        }
    };
    out.write_field("phi.bin", &res.phi, "mean-zero potential at t = 1")?;
    out.write_standard_slices("phi", &res.phi)?;
    let mut code = ExitCode::Success;
    report.status = "converged";
    if let Some(o) = oracle {
        let d = res.phi.distance(&o);
        let passed = d <= ORACLE_TOL;
        eprintln!("oracle: sup |phi - oracle| = {d:.3e} (tolerance {ORACLE_TOL:.0e})");
        if !passed {
            code = ExitCode::PropertyFailure;
            report.status = "oracle-mismatch";
        }
        out.write_field("oracle.bin", &o, "separable Poisson-reduction oracle")?;
        report.oracle =
            Some(OracleComparison { sup_difference: d, tolerance: ORACLE_TOL, passed, oracle: FieldStats::of(&o) });
    }
    eprintln!(
        "converged: residual {:.3e}, {} Newton / {} Krylov iterations, sup phi {:.3e}",
        res.final_residual,
        res.newton_iterations,
        res.krylov_iterations,
        res.phi.sup_norm()
    );
    report.solve = Some(SolveSummary::of(&res));
    out.write_json("report.json", &report)?;
    Ok(code)
}

#[derive(Serialize)]
struct SuiteSummary {
    name: String,
    samples: usize,
    counterexamples: usize,
    worst_margin: f64,
    rejected: usize,
    passed: bool,
}

#[derive(Serialize)]
struct LemmaReport {
    seed: u64,
    corrupt_adjugate: bool,
    warnings: Vec<String>,
    suites: Vec<SuiteSummary>,
    passed: bool,
}

fn verify_lemmas(config: &RunConfig, out: &mut Artifacts) -> Result<ExitCode, CliError> {
    let lc = &config.lemmas;
    let adj: AdjugateFn = if lc.corrupt_adjugate { corrupted_adjugate } else { HermForm::adjugate };
    let suites: Vec<SuiteReport> = out.time("suites", || run_all(&lc.counts(), config.seed, adj));
    let mut warnings = Vec::new();
    for s in &suites {
        if s.samples == 0 {
            warnings.push(format!("{}: zero samples, vacuous pass", s.name));
        }
        eprintln!(
            "{}: {} samples, {} counterexamples, worst margin {:.3e}",
            s.name, s.samples, s.counterexamples, s.worst_margin
        );
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let passed = suites.iter().all(SuiteReport::passed);
    let report = LemmaReport {
        seed: config.seed,
        corrupt_adjugate: lc.corrupt_adjugate,
        warnings,
        suites: suites
            .iter()
            .map(|s| SuiteSummary {
                name: s.name.clone(),
                samples: s.samples,
                counterexamples: s.counterexamples,
                worst_margin: s.worst_margin,
                rejected: s.rejected,
                passed: s.passed(),
            })
            .collect(),
        passed,
    };
    out.write_json("report.json", &report)?;
    Ok(if passed { ExitCode::Success } else { ExitCode::PropertyFailure })
}

#[derive(Serialize)]
struct TraceSummary {
    k: usize,
    tr1: HermFormRepr,
    tr2_dual: Option<HermFormRepr>,
    top_density: f64,
    cubic_margin: Option<f64>,
    alpha_dual: Option<HermFormRepr>,
}

#[derive(Serialize)]
struct ChernWeilReport {
    seed: u64,
    status: &'static str,
    bundle: BundleFile,
    epsilon: f64,
    eta: FieldStats,
    traces: TraceSummary,
    hypotheses: CwReport,
    violations: Vec<String>,
    reduced: Option<ProblemSummary>,
    reduced_hypotheses: Option<HypothesisReport>,
    solve: Option<SolveSummary>,
    chern: Option<ChernReport>,
    passed: bool,
    failure: Option<Failure>,
}

/// `tr(Θ₀³) + εg` on threefolds, `tr(Θ₀²) + ε·g·tr(Θ₀)²` on surfaces.
fn target_eta(bundle: &DirectSumBundle, grid: &GridSpec, config: &RunConfig) -> Result<ScalarField, CliError> {
    let cw = &config.chern_weil;
    let g = band_limited_random(grid, config.seed, cw.max_mode, 1.0)?;
    let scale = if bundle.n() == 2 { curvature_traces(bundle).tr1_power_density() } else { 1.0 };
    Ok(perturbed_eta(bundle, grid, cw.epsilon * scale, &g)?)
}

fn chern_weil(config: &RunConfig, out: &mut Artifacts) -> Result<ExitCode, CliError> {
    let bundle = config.chern_weil.load_bundle()?;
    let grid = config.grid.spec()?;
    if grid.n() != bundle.n() {
        let hint = match bundle.n() {
            2 => "a 4-axis grid",
            _ => "a 6-axis grid",
        };
        return Err(CliError::config(format!(
            "bundle lives on C^{} but the grid has {} axes (use {hint})",
            bundle.n(),
            grid.dims()
        )));
    }
    let eta = target_eta(&bundle, &grid, config)?;
    out.write_field("eta.bin", &eta, "target top-degree density")?;
    let tr = curvature_traces(&bundle);
    let case = if bundle.n() == 2 { 1 } else { 2 };
    let hyp = check_cw_hypotheses(&bundle, case, &eta)?;
    let mut report = ChernWeilReport {
        seed: config.seed,
        status: "hypothesis-failure",
        bundle: BundleFile::from(&bundle),
        epsilon: config.chern_weil.epsilon,
        eta: FieldStats::of(&eta),
        traces: TraceSummary {
            k: tr.k,
            tr1: HermFormRepr::from(&tr.tr1),
            tr2_dual: tr.tr2_dual.map(|d| HermFormRepr::from(&d.0)),
            top_density: tr.top_density(),
            cubic_margin: tr.cubic_margin(),
            alpha_dual: tr.alpha_dual().map(|d| HermFormRepr::from(&d.0)),
        },
        violations: hyp.violations(),
        hypotheses: hyp,
        reduced: None,
        reduced_hypotheses: None,
        solve: None,
        chern: None,
        passed: false,
        failure: None,
    };
    for v in &report.violations {
        eprintln!("hypothesis: {v}");
    }
    let reduced = if case == 1 { reduce_surface(&bundle, &eta) } else { reduce_threefold(&bundle, &eta) };
    let spec = match reduced {
        Ok(s) => s,
        Err(e) => {
            report.failure = Some(failure("reduce", &e));
            out.write_json("report.json", &report)?;
            return Ok(classify(&e));
        }
    };
    report.reduced = Some(ProblemSummary::of(&spec));
    report.reduced_hypotheses = Some(check_problem_hypotheses(&spec));
    let res = match out.time("solve", || continuity_solve(&spec, &config.settings)) {
        Ok(r) => r,
        Err(e) => {
            if let GmaError::PathFailure { last_t, last_phi, .. } = &e {
                eprintln!("path failure: last good t = {last_t}");
                out.write_field("phi_last_good.bin", last_phi, &format!("last solved iterate, t = {last_t}"))?;
            }
            report.status = "path-failure";
            report.failure = Some(failure("solve", &e));
            out.write_json("report.json", &report)?;
            return Ok(classify(&e));
        }
    };
    let top = out.time("reconstruct", || reconstruct_top_chern(&bundle, &res.phi))?;
    let chern = verify_chern(&bundle, &res.phi, &eta)?;
    out.write_field("phi.bin", &res.phi, "conformal potential")?;
    out.write_field("top_chern.bin", &top, "reconstructed top Chern character density")?;
    let defect = top.zip_map(&eta, |a, b| a - b);
    out.write_standard_slices("phi", &res.phi)?;
    out.write_standard_slices("defect", &defect)?;
    eprintln!(
        "chern: sup defect {:.3e}, integral defect {:.3e}, class defect {:.3e}",
        chern.sup_defect, chern.integral_defect, chern.class_defect
    );
    report.passed = chern.passed();
    report.status = if report.passed { "verified" } else { "defect-too-large" };
    report.solve = Some(SolveSummary::of(&res));
    report.chern = Some(chern);
    out.write_json("report.json", &report)?;
    Ok(if report.passed { ExitCode::Success } else { ExitCode::PropertyFailure })
}

#[derive(Serialize)]
struct ExportSummary {
    input: String,
    n: usize,
    sizes: Vec<usize>,
    axes: [usize; 2],
    fixed: Vec<usize>,
    stats: FieldStats,
}

fn export(config: &RunConfig, out: &mut Artifacts) -> Result<ExitCode, CliError> {
    let ec = &config.export;
    let input = ec.input.as_ref().ok_or_else(|| CliError::config("export.input is required"))?;
    if !input.exists() {
        return Err(CliError::io(format!("field dump {} does not exist", input.display())));
    }
    let field = read_scalar_field(input).map_err(|e| CliError::io(format!("{}: {e}", input.display())))?;
    let grid = field.grid().clone();
    let axes = ec.axes.unwrap_or([0, grid.n()]);
    let fixed = ec.fixed.clone().unwrap_or_else(|| vec![0; grid.dims()]);
    let slice = SliceSpec::new((axes[0], axes[1]), fixed.clone());
    slice.validate(&grid)?;
    let name = format!("slice_{}_{}.csv", grid.axis_name(axes[0]), grid.axis_name(axes[1]));
    out.write_slice(&name, &field, &slice)?;
    out.write_json(
        "summary.json",
        &ExportSummary {
            input: input.display().to_string(),
            n: grid.n(),
            sizes: grid.sizes().to_vec(),
            axes,
            fixed,
            stats: FieldStats::of(&field),
        },
    )?;
    Ok(ExitCode::Success)
}
