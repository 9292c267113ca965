use std::f64::consts::PI;

use gma_core::grid::band_limited_random;
use gma_core::solver::{
    check_problem_hypotheses, continuity_solve, field_cone_margins, linearized_apply, newton_solve, operator_density,
    residual, rhs_at, verify_uniqueness, NewtonSettings,
};
use gma_core::{ContinuitySettings, Forcing, GmaError, GridSpec, HermForm, ProblemSpec, ScalarField};
use proptest::prelude::*;

fn spec(grid: &GridSpec, a: f64, forcing: ScalarField) -> ProblemSpec {
    let n = grid.n();
    ProblemSpec::new(HermForm::identity(n), HermForm::identity(n).scale(a), Forcing::Driving(forcing), 0.0).unwrap()
}

/// Quadratic ratios `r_{k+1}/r_k²` over the tail of each Newton run.
fn quadratic_ratios(res: &gma_core::SolveResult) -> Vec<f64> {
    let floor = 1e-13 * res.f0;
    res.residual_history
        .windows(2)
        .filter(|w| w[0].t == w[1].t && w[0].residual < 1e-3 * res.f0 && w[1].residual > floor)
        .map(|w| w[1].residual / (w[0].residual * w[0].residual))
        .collect()
}

#[test]
fn finite_difference_consistency() {
    let grid = GridSpec::uniform(3, 4).unwrap();
    let s = spec(&grid, 1.0 / 6.0, ScalarField::zeros(&grid));
    let phi = band_limited_random(&grid, 1, 1, 0.01).unwrap();
    let delta = band_limited_random(&grid, 2, 1, 1.0).unwrap();
    let rhs = ScalarField::zeros(&grid);
    let lin = linearized_apply(&phi, &delta, &s).unwrap();
    let best = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
        .iter()
        .map(|&eps| {
            let plus = residual(&phi.axpy(eps, &delta), &s, &rhs).unwrap();
            let minus = residual(&phi.axpy(-eps, &delta), &s, &rhs).unwrap();
            let fd = plus.zip_map(&minus, |a, b| (a - b) / (2.0 * eps));
            fd.distance(&lin) / lin.sup_norm()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-6, "best relative error {best:.3e}");
}

#[test]
fn translation_equivariance() {
    let grid = GridSpec::uniform(2, 8).unwrap();
    let f = band_limited_random(&grid, 21, 2, 0.3).unwrap();
    let shift = [3isize, -2, 1, 5];
    let a = continuity_solve(&spec(&grid, 0.0, f.clone()), &ContinuitySettings::default()).unwrap();
    let b = continuity_solve(&spec(&grid, 0.0, f.shifted(&shift)), &ContinuitySettings::default()).unwrap();
    assert!(b.phi.distance(&a.phi.shifted(&shift)) <= 1e-12);
}

#[test]
fn direct_newton_converges_quadratically() {
    let grid = GridSpec::uniform(2, 8).unwrap();
    let s = spec(&grid, 0.0, band_limited_random(&grid, 5, 2, 0.1).unwrap());
    let rhs = rhs_at(&s, 1.0).unwrap();
    let res = newton_solve(&s, &rhs, &ScalarField::zeros(&grid), &NewtonSettings::default()).unwrap();
    assert!(res.final_residual <= 1e-10 * res.f0);
    let ratios = quadratic_ratios(&res);
    assert!(!ratios.is_empty(), "{:?}", res.residual_history.iter().map(|r| r.residual).collect::<Vec<_>>());
    assert!(ratios.iter().all(|&c| c < 100.0), "{ratios:?}");
    assert!(res.phi.mean().abs() <= 1e-12);
}

#[test]
fn accepted_iterates_stay_elliptic() {
    let grid = GridSpec::uniform(3, 4).unwrap();
    let s = spec(&grid, 1.0 / 6.0, band_limited_random(&grid, 8, 1, 0.4).unwrap());
    let res = continuity_solve(&s, &ContinuitySettings::default()).unwrap();
    assert!(res.residual_history.iter().all(|r| r.cone.all_positive()));
    assert!(res.cone_report.iter().all(|r| r.cone.lambda_min_l > 0.0));
    assert!(res.final_residual <= 1e-10 * res.f0);
    let m = field_cone_margins(&res.phi, &s).unwrap();
    assert!(m.all_positive());
}

#[test]
fn uniqueness_small_grid() {
    let grid = GridSpec::uniform(2, 8).unwrap();
    let s = spec(&grid, 0.0, band_limited_random(&grid, 3, 2, 0.3).unwrap());
    let res = continuity_solve(&s, &ContinuitySettings::default()).unwrap();
    for seed in [1, 2] {
        let rep = verify_uniqueness(&s, &res, seed, &NewtonSettings::default());
        assert!(rep.error.is_none(), "{rep:?}");
        assert!(rep.distance.unwrap() <= 1e-8);
    }
    let zero = spec(&grid, 0.0, ScalarField::zeros(&grid));
    let trivial = continuity_solve(&zero, &ContinuitySettings::default()).unwrap();
    let rep = verify_uniqueness(&zero, &trivial, 4, &NewtonSettings::default());
    assert!(rep.distance.unwrap() <= 1e-12);
}

#[test]
fn path_failure_carries_last_good_state() {
    let grid = GridSpec::uniform(2, 8).unwrap();
    let s = spec(&grid, 0.0, band_limited_random(&grid, 3, 2, 0.5).unwrap());
    let mut settings = ContinuitySettings { dt_initial: 0.5, dt_min: 0.2, ..Default::default() };
    settings.newton.max_iters = 1;
    match continuity_solve(&s, &settings) {
        Err(GmaError::PathFailure { last_t, dt_min, last_phi }) => {
            assert!(last_t < 1.0);
            assert_eq!(dt_min, 0.2);
            assert_eq!(last_phi.grid(), &grid);
        }
        other => panic!("expected a path failure, got {other:?}"),
    }
}

#[test]
fn density_forcing_matches_driving_function() {
    let grid = GridSpec::uniform(2, 8).unwrap();
    let f = band_limited_random(&grid, 12, 1, 0.2).unwrap();
    let driving = spec(&grid, 0.0, f);
    let eta = rhs_at(&driving, 1.0).unwrap();
    let direct =
        ProblemSpec::new(HermForm::identity(2), HermForm::zeros(2), Forcing::Density(eta.clone()), 0.0).unwrap();
    let a = continuity_solve(&driving, &ContinuitySettings::default()).unwrap();
    let b = continuity_solve(&direct, &ContinuitySettings::default()).unwrap();
    assert!(a.phi.distance(&b.phi) <= 1e-10);
    let r = residual(&b.phi, &direct, &eta).unwrap();
    assert!(r.sup_norm() <= 1e-10);
}

#[test]
fn separable_problem_on_the_surface_matches_oracle() {
    let grid = GridSpec::new(2, vec![16, 2, 16, 2]).unwrap();
    let f = ScalarField::from_fn(&grid, |x| 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[2]).sin());
    let s = spec(&grid, 0.0, f);
    let res = continuity_solve(&s, &ContinuitySettings::default()).unwrap();
    let oracle = gma_core::oracle::separable_oracle(&s).unwrap();
    assert!(res.phi.distance(&oracle) <= 1e-8);
}

#[test]
fn invalid_specs_are_rejected_before_stepping() {
    let grid = GridSpec::uniform(3, 2).unwrap();
    let bad =
        ProblemSpec::new(HermForm::identity(3), HermForm::zeros(3), Forcing::Driving(ScalarField::zeros(&grid)), 0.1)
            .unwrap();
    let rep = check_problem_hypotheses(&bad);
    assert!(rep.strong_positivity_margin.unwrap() < 0.0);
    assert!(matches!(continuity_solve(&bad, &ContinuitySettings::default()), Err(GmaError::HypothesisViolation(_))));
    assert!(ProblemSpec::new(
        HermForm::identity(2),
        HermForm::identity(2),
        Forcing::Driving(ScalarField::zeros(&GridSpec::uniform(2, 2).unwrap())),
        0.0
    )
    .is_err());
    let settings = ContinuitySettings { dt_min: 0.5, dt_initial: 0.1, ..Default::default() };
    let ok = spec(&grid, 1.0 / 6.0, ScalarField::zeros(&grid));
    assert!(matches!(continuity_solve(&ok, &settings), Err(GmaError::InvalidInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raw_mass_is_conserved_for_band_limited_fields(seed in 0u64..100_000, amp in 0.001f64..0.03) {
        let grid = GridSpec::uniform(3, 4).unwrap();
        let s = spec(&grid, 1.0 / 6.0, ScalarField::zeros(&grid));
        let phi = band_limited_random(&grid, seed, 1, amp).unwrap();
        prop_assume!(field_cone_margins(&phi, &s).unwrap().all_positive());
        let t = operator_density(&phi, &s).unwrap();
        prop_assert!((t.mean() - 0.5).abs() <= 1e-10 * 0.5);
    }

    #[test]
    fn residual_is_conservative(seed in 0u64..100_000) {
        let grid = GridSpec::uniform(2, 4).unwrap();
        let s = spec(&grid, 0.0, ScalarField::zeros(&grid));
        let phi = band_limited_random(&grid, seed, 1, 0.05).unwrap();
        let r = residual(&phi, &s, &ScalarField::constant(&grid, 1.0)).unwrap();
        prop_assert!(r.mean().abs() <= 1e-14);
    }

    #[test]
    fn linearization_annihilates_constants(seed in 0u64..100_000, c in -3.0f64..3.0) {
        let grid = GridSpec::uniform(2, 4).unwrap();
        let s = spec(&grid, 0.0, ScalarField::zeros(&grid));
        let phi = band_limited_random(&grid, seed, 1, 0.05).unwrap();
        let out = linearized_apply(&phi, &ScalarField::constant(&grid, c), &s).unwrap();
        prop_assert!(out.sup_norm() <= 1e-13);
    }
}
