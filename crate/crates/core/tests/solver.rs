use escape_chimney::chimney::{boundary_conditions, find_apogee};
use escape_chimney::reference::planar_model;
use escape_chimney::variational::{
    forward_simulate, simulate_profile, solve, Objective, ProblemSpec, SolverSettings,
};
use escape_chimney::Error;
use nalgebra::Vector3;

fn planar_spec(settings: SolverSettings) -> ProblemSpec {
    let model = planar_model();
    let g = find_apogee(&model).unwrap();
    let bc = boundary_conditions(&g, 1e-3, 1e-3).unwrap();
    ProblemSpec::new(model, bc, settings).unwrap()
}

#[test]
fn planar_time_minimum_order_one() {
    let mut s = SolverSettings::new(Objective::Time, 1);
    s.starts = 5;
    let spec = planar_spec(s);
    let sol = solve(&spec).unwrap();
    assert!((sol.time - 1.9355).abs() < 2e-3, "t_f = {}", sol.time);
    assert!(sol.feasible && sol.residual < 1e-4);
    assert!((sol.terminal_controls().z + 0.5).abs() < 0.05);

    let path = forward_simulate(&spec, &sol).unwrap();
    assert!(path.terminal_error <= 5e-3);
    assert!(path.time_mismatch <= 0.01);
    assert_eq!(path.radius_decreases, 0);
}

#[test]
fn same_seed_same_solution() {
    let mut s = SolverSettings::new(Objective::Energy, 2);
    s.starts = 3;
    s.seed = 11;
    let spec = planar_spec(s);
    assert_eq!(solve(&spec).unwrap(), solve(&spec).unwrap());
}

#[test]
fn unreachable_tolerance_reports_no_convergence() {
    let mut s = SolverSettings::new(Objective::Time, 2);
    s.starts = 1;
    s.restarts = 0;
    s.warm_start = false;
    s.residual_tolerance = 1e-300;
    match solve(&planar_spec(s)) {
        Err(Error::NoConvergence { starts, best_coefficients, .. }) => {
            assert_eq!(starts, 1);
            assert_eq!(best_coefficients.len(), 2);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn zero_length_profile_takes_no_time() {
    let q = Vector3::new(0.1, 0.2, 0.0);
    let path = simulate_profile(&planar_model(), &q, &q, &[], 1.0).unwrap();
    assert!(path.samples.is_empty());
    assert_eq!(path.elapsed, 0.0);
}

#[test]
fn bad_settings_are_rejected() {
    let model = planar_model();
    let g = find_apogee(&model).unwrap();
    let bc = boundary_conditions(&g, 1e-3, 1e-3).unwrap();
    let mut s = SolverSettings::new(Objective::Time, 0);
    assert!(matches!(ProblemSpec::new(model, bc, s), Err(Error::Validation { .. })));
    s.order = 2;
    s.starts = 0;
    assert!(matches!(ProblemSpec::new(model, bc, s), Err(Error::Validation { .. })));
}
