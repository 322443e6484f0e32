//! Closed-loop behavior of the full controller stack, driven directly
//! through the library API (the CLI harness has its own suite).

use nalgebra::{DMatrix, DVector};

use nmpc_core::dynamics::PlantParams;
use nmpc_core::integrator::{euler_propagate, DiscretizationConfig};
use nmpc_core::nmpc::shift_hotstart;
use nmpc_core::sqp::HorizonProblem;
use nmpc_core::{NmpcController, NmpcSettings, SolveStatus};

fn swingup_problem(horizon: usize) -> HorizonProblem<PlantParams> {
    HorizonProblem::new(
        PlantParams::default(),
        horizon,
        DiscretizationConfig::new(0.05, 5).unwrap(),
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.1, 5.0])),
        DMatrix::from_element(1, 1, 0.1),
        DVector::from_element(1, -10.0),
        DVector::from_element(1, 10.0),
    )
    .unwrap()
    .with_state_bound(1, Some(-2.0), Some(2.0))
    .unwrap()
}

/// Swing-up at library level: from hanging, the pendulum must reach the
/// upright set within a few seconds while every issued force stays in the
/// box.
#[test]
fn swings_up_from_hanging() {
    let prob = swingup_problem(40);
    let mut ctrl = NmpcController::new(&prob, NmpcSettings::default());
    let plant = PlantParams::default();
    let plant_disc = DiscretizationConfig::new(0.05, 50).unwrap();
    let mut x = DVector::from_vec(vec![0.0, 0.0, 0.0, std::f64::consts::PI]);
    for tick in 0..160 {
        let t = tick as f64 * 0.05;
        let u = ctrl.solve_tick(&prob, t, &x);
        assert!(
            u[0].abs() <= 10.0 + 1e-9,
            "issued force {} out of bounds",
            u[0]
        );
        x = euler_propagate(&plant, t, &x, &u, &plant_disc);
        assert!(x[1].abs() <= 2.0 + 1e-6, "cart left its box: {}", x[1]);
        ctrl.shift_hotstart();
    }
    assert!(x[3].abs() < 0.05, "pendulum not upright: theta = {}", x[3]);
    assert!(x[1].abs() < 0.05, "cart not centered: p = {}", x[1]);
}

#[test]
fn dual_warm_start_across_ticks_still_converges() {
    let prob = swingup_problem(25);
    let settings = NmpcSettings {
        warm_start_duals: true,
        ..NmpcSettings::default()
    };
    let mut ctrl = NmpcController::new(&prob, settings);
    let plant = PlantParams::default();
    let disc = DiscretizationConfig::new(0.05, 5).unwrap();
    let mut x = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.8]);
    for tick in 0..60 {
        let t = tick as f64 * 0.05;
        let u = ctrl.solve_tick(&prob, t, &x);
        assert_ne!(ctrl.state.status, SolveStatus::QpFailure);
        x = euler_propagate(&plant, t, &x, &u, &disc);
        ctrl.shift_hotstart();
    }
    assert!(x[3].abs() < 0.02, "theta = {}", x[3]);
}

/// The per-tick solve must treat the hot start exactly like Algorithm 4:
/// shifting then re-solving from the same plant state cannot break bounds
/// even with an adversarial stored sequence.
#[test]
fn adversarial_hotstart_is_recovered_from() {
    let prob = swingup_problem(15);
    let mut ctrl = NmpcController::new(&prob, NmpcSettings::default());
    ctrl.set_hotstart(DVector::from_fn(15, |k, _| {
        if k % 2 == 0 {
            1e3
        } else {
            -1e3
        }
    }));
    let x = DVector::from_vec(vec![0.2, -0.3, 0.0, 2.0]);
    let u = ctrl.solve_tick(&prob, 0.0, &x);
    assert!(u[0].abs() <= 10.0 + 1e-9);
    assert_ne!(ctrl.state.status, SolveStatus::QpFailure);
}

#[test]
fn shift_compose_matches_manual_rotation() {
    let seq = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let twice = shift_hotstart(&shift_hotstart(&seq, 1), 1);
    assert_eq!(twice, DVector::from_vec(vec![3.0, 4.0, 5.0, 5.0, 5.0]));
}
