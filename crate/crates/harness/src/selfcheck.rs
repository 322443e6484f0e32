//! Built-in invariant suite behind the `check` subcommand: a condensed run
//! of the cross-checks the test suite performs, against the brute-force
//! references, printing one line per check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nmpc_core::dynamics::PlantParams;
use nmpc_core::integrator::{
    euler_propagate, euler_step_with_sensitivities, ContinuousModel, DiscretizationConfig,
    LinearModel,
};
use nmpc_core::qp::{solve_kkt, solve_qp, QpSettings, QpSubproblem};
use nmpc_core::sqp::HorizonProblem;
use nmpc_core::{NmpcController, NmpcSettings};
use nmpc_testkit::{
    active_set_qp, dense_kkt_solve, fd_jacobian, gauss_newton_step, lti_euler_reference,
    max_rel_err,
};

struct Check {
    name: &'static str,
    run: fn() -> Result<(), String>,
}

fn report(result: &Result<(), String>, name: &str) -> bool {
    match result {
        Ok(()) => {
            println!("PASS {name}");
            true
        }
        Err(msg) => {
            println!("FAIL {name}: {msg}");
            false
        }
    }
}

/// Runs every check; returns true when all of them pass.
pub fn run_selfcheck() -> bool {
    let checks = [
        Check {
            name: "dynamics-gradients-vs-finite-differences",
            run: check_dynamics,
        },
        Check {
            name: "discrete-sensitivities",
            run: check_sensitivities,
        },
        Check {
            name: "structured-kkt-vs-dense",
            run: check_kkt,
        },
        Check {
            name: "qp-vs-active-set-enumeration",
            run: check_qp,
        },
        Check {
            name: "gauss-newton-exactness",
            run: check_gauss_newton,
        },
        Check {
            name: "setpoint-hold",
            run: check_setpoint,
        },
    ];
    let mut all_ok = true;
    for check in &checks {
        all_ok &= report(&(check.run)(), check.name);
    }
    all_ok
}

fn check_dynamics() -> Result<(), String> {
    let plant = PlantParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let x = DVector::from_vec(vec![
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-7.0..7.0),
        ]);
        let u = DVector::from_element(1, rng.gen_range(-10.0..10.0));
        let analytic = plant.jac_state(0.0, &x, &u);
        let numeric = fd_jacobian(|xx| plant.derivative(0.0, xx, &u), &x, None);
        let err = max_rel_err(&analytic, &numeric, 1e-8);
        if err > 1e-5 {
            return Err(format!("state jacobian off by {err:.2e}"));
        }
        let analytic = plant.jac_input(0.0, &x, &u);
        let numeric = fd_jacobian(|uu| plant.derivative(0.0, &x, uu), &u, None);
        let err = max_rel_err(&analytic, &numeric, 1e-8);
        if err > 1e-5 {
            return Err(format!("input jacobian off by {err:.2e}"));
        }
    }
    Ok(())
}

fn check_sensitivities() -> Result<(), String> {
    let plant = PlantParams::default();
    let cfg = DiscretizationConfig::new(0.05, 5).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..20 {
        let x = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
        let u = DVector::from_element(1, rng.gen_range(-8.0..8.0));
        let step = euler_step_with_sensitivities(&plant, 0.0, &x, &u, &cfg);
        let fd = fd_jacobian(|xx| euler_propagate(&plant, 0.0, xx, &u, &cfg), &x, None);
        if max_rel_err(&step.jac_state, &fd, 1e-8) > 1e-5 {
            return Err("transition jacobian disagrees with finite differences".into());
        }
    }
    // LTI closed form
    let model = LinearModel::new(
        DMatrix::from_row_slice(2, 2, &[-0.5, 0.2, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.3]),
    );
    let x = DVector::from_vec(vec![0.4, -1.0]);
    let u = DVector::from_element(1, 0.7);
    let step = euler_step_with_sensitivities(&model, 0.0, &x, &u, &cfg);
    let (next, jx, ju) = lti_euler_reference(&model.a, &model.b, &x, &u, cfg.dt, cfg.slices);
    if (&step.next_state - &next).amax() > 1e-12
        || (&step.jac_state - &jx).amax() > 1e-12
        || (&step.jac_input - &ju).amax() > 1e-12
    {
        return Err("linear-model closed form mismatch".into());
    }
    Ok(())
}

fn random_factor(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = rng.gen_range(0.5..2.0);
        for j in (i + 1)..n {
            r[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    r
}

fn random_box(rng: &mut ChaCha8Rng, n: usize, rows: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut a = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    for r in 0..rows {
        let i = rng.gen_range(0..n);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        a[(r, i)] = sign;
        b[r] = -rng.gen_range(0.05..1.5);
    }
    (a, b)
}

fn check_kkt() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..25 {
        let n = rng.gen_range(1..7);
        let m = rng.gen_range(1..7);
        let sub = QpSubproblem {
            hessian_factor: random_factor(&mut rng, n),
            gradient: DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
            constraint_matrix: DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0)),
            constraint_rhs: DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0)),
        };
        let lambda = DVector::from_fn(m, |_, _| rng.gen_range(0.05..3.0));
        let y = DVector::from_fn(m, |_, _| rng.gen_range(0.05..3.0));
        let v1 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let v2 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let v3 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let (dp, dy, dl) =
            solve_kkt(&sub, &lambda, &y, &v1, &v2, &v3).map_err(|e| e.to_string())?;
        let (ep, ey, el) = dense_kkt_solve(
            &sub.dense_hessian(),
            &sub.constraint_matrix,
            &lambda,
            &y,
            &v1,
            &v2,
            &v3,
        )
        .ok_or("dense solve failed")?;
        let worst = (dp - ep).amax().max((dy - ey).amax()).max((dl - el).amax());
        if worst > 1e-10 {
            return Err(format!("structured vs dense differ by {worst:.2e}"));
        }
    }
    Ok(())
}

fn check_qp() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let settings = QpSettings {
        residual_tol: 1e-12,
        ..QpSettings::default()
    };
    for _ in 0..25 {
        let n = rng.gen_range(1..7);
        let m = rng.gen_range(1..9);
        let (a, b) = random_box(&mut rng, n, m);
        let sub = QpSubproblem {
            hessian_factor: random_factor(&mut rng, n),
            gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
            constraint_matrix: a,
            constraint_rhs: b,
        };
        let ones = DVector::from_element(m, 1.0);
        let sol = solve_qp(&sub, &ones, &ones, &settings).map_err(|e| e.to_string())?;
        let oracle = active_set_qp(
            &sub.dense_hessian(),
            &sub.gradient,
            &sub.constraint_matrix,
            &sub.constraint_rhs,
            1e-9,
        )
        .ok_or("enumeration found no feasible candidate")?;
        let gap = (&sol.step - &oracle.step).amax();
        if gap > 1e-6 {
            return Err(format!("step differs from enumeration by {gap:.2e}"));
        }
        if sol.kkt_residual > 1e-6 {
            return Err(format!("kkt residual {:.2e}", sol.kkt_residual));
        }
    }
    Ok(())
}

fn check_gauss_newton() -> Result<(), String> {
    let model = LinearModel::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
    );
    let prob = HorizonProblem::new(
        model,
        8,
        DiscretizationConfig::new(0.1, 2).map_err(|e| e.to_string())?,
        DMatrix::identity(2, 2),
        DMatrix::from_element(1, 1, 0.05),
        DVector::from_element(1, f64::NEG_INFINITY),
        DVector::from_element(1, f64::INFINITY),
    )
    .map_err(|e| e.to_string())?;
    let x0 = DVector::from_vec(vec![1.0, -0.7]);
    let mut ctrl = NmpcController::new(&prob, NmpcSettings::default());
    ctrl.solve_tick(&prob, 0.0, &x0);
    let accepted = ctrl.state.trace.iter().filter(|d| d.accepted).count();
    if accepted != 1 {
        return Err(format!("expected one accepted step, saw {accepted}"));
    }
    let lin = prob
        .linearize(0.0, &x0, &DVector::zeros(8))
        .map_err(|e| e.to_string())?;
    let jac = prob.build_jacobian(&lin.sensitivities);
    let oracle = gauss_newton_step(&jac, &lin.residual).ok_or("singular normal equations")?;
    let gap = (&ctrl.state.best_inputs - &oracle).amax();
    if gap > 1e-6 {
        return Err(format!("solution differs from least-squares oracle by {gap:.2e}"));
    }
    Ok(())
}

fn check_setpoint() -> Result<(), String> {
    let prob = HorizonProblem::new(
        PlantParams::default(),
        20,
        DiscretizationConfig::new(0.05, 5).map_err(|e| e.to_string())?,
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.1, 5.0])),
        DMatrix::from_element(1, 1, 0.1),
        DVector::from_element(1, -10.0),
        DVector::from_element(1, 10.0),
    )
    .map_err(|e| e.to_string())?
    .with_state_bound(1, Some(-2.0), Some(2.0))
    .map_err(|e| e.to_string())?;
    let mut ctrl = NmpcController::new(&prob, NmpcSettings::default());
    let x0 = DVector::zeros(4);
    for _ in 0..20 {
        let u = ctrl.solve_tick(&prob, 0.0, &x0);
        if u[0] != 0.0 {
            return Err(format!("nonzero force {} at the setpoint", u[0]));
        }
        ctrl.shift_hotstart();
    }
    Ok(())
}
