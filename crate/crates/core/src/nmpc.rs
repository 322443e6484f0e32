//! Receding-horizon controller.
//!
//! One control tick runs the loop {linearize -> solve QP -> line search}
//! until the line search raises its converged flag, the step norm drops
//! below tolerance, or the iteration budget runs out. The accepted input
//! sequence seeds the next tick after shifting (drop the issued input,
//! duplicate the last). On QP failure the tick degrades gracefully: the
//! hot-start sequence is kept and its first input is issued.

use nalgebra::DVector;

use crate::integrator::ContinuousModel;
use crate::qp::{solve_qp, QpSettings, QpSubproblem};
use crate::sqp::{line_search, positive_part_l1, HorizonProblem, LineSearchSettings};

/// How a tick's SQP solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged: negligible step or no acceptable improvement while feasible.
    Optimal,
    /// Ran out of SQP iterations while still making progress.
    IterLimit,
    /// The line search could not reduce the constraint violation.
    StalledInfeasible,
    /// The QP solver failed and the hot start was issued unchanged.
    QpFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::IterLimit => "iter-limit",
            SolveStatus::StalledInfeasible => "stalled-infeasible",
            SolveStatus::QpFailure => "qp-failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct NmpcSettings {
    /// SQP iteration budget per tick.
    pub max_sqp_iters: usize,
    /// Exit once `|alpha p*|_inf` (or `|p*|_inf` straight after the QP)
    /// falls below this.
    pub step_tol: f64,
    pub qp: QpSettings,
    pub line_search: LineSearchSettings,
    /// Carry multipliers and slacks across ticks instead of resetting them
    /// to ones. Off by default.
    pub warm_start_duals: bool,
    /// When set, every linearization and QP subproblem is dumped as CSV
    /// below this directory.
    pub debug_dump: Option<std::path::PathBuf>,
}

impl Default for NmpcSettings {
    fn default() -> Self {
        Self {
            max_sqp_iters: 15,
            step_tol: 1e-8,
            qp: QpSettings::default(),
            line_search: LineSearchSettings::default(),
            warm_start_duals: false,
            debug_dump: None,
        }
    }
}

/// Diagnostics for one SQP iteration of one tick.
#[derive(Debug, Clone, Copy)]
pub struct SqpIterationDiag {
    /// Cost at the linearization point.
    pub cost: f64,
    /// Squared norm of the stacked residual at the same point.
    pub residual_norm_sq: f64,
    /// Positive-part violation at the linearization point.
    pub violation: f64,
    pub qp_iterations: usize,
    pub alpha: f64,
    pub accepted: bool,
    pub step_inf_norm: f64,
}

/// Mutable controller state carried from tick to tick.
#[derive(Debug, Clone)]
pub struct ControllerState {
    /// Current best input sequence (flat, length `N * n_u`).
    pub best_inputs: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub slacks: DVector<f64>,
    pub last_cost: f64,
    pub last_iterations: usize,
    pub last_qp_iterations: usize,
    pub status: SolveStatus,
    /// Per-iteration diagnostics of the most recent tick.
    pub trace: Vec<SqpIterationDiag>,
}

/// Shifted hot start: drop the issued input, duplicate the final one.
pub fn shift_hotstart(inputs: &DVector<f64>, n_u: usize) -> DVector<f64> {
    let total = inputs.len();
    assert!(n_u > 0 && total.is_multiple_of(n_u) && total >= n_u);
    let mut shifted = DVector::zeros(total);
    shifted
        .rows_mut(0, total - n_u)
        .copy_from(&inputs.rows(n_u, total - n_u));
    shifted
        .rows_mut(total - n_u, n_u)
        .copy_from(&inputs.rows(total - n_u, n_u));
    shifted
}

#[derive(Debug)]
pub struct NmpcController {
    pub settings: NmpcSettings,
    pub state: ControllerState,
    n_u: usize,
}

impl NmpcController {
    pub fn new<M: ContinuousModel>(prob: &HorizonProblem<M>, settings: NmpcSettings) -> Self {
        let m = prob.constraint_count();
        Self {
            settings,
            state: ControllerState {
                best_inputs: DVector::zeros(prob.n_decision()),
                multipliers: DVector::from_element(m, 1.0),
                slacks: DVector::from_element(m, 1.0),
                last_cost: 0.0,
                last_iterations: 0,
                last_qp_iterations: 0,
                status: SolveStatus::Optimal,
                trace: Vec::new(),
            },
            n_u: prob.n_u(),
        }
    }

    /// Replaces the hot start wholesale (e.g. to reset the controller).
    pub fn set_hotstart(&mut self, inputs: DVector<f64>) {
        assert_eq!(inputs.len(), self.state.best_inputs.len());
        self.state.best_inputs = inputs;
    }

    /// Shifts the stored sequence for the next tick.
    pub fn shift_hotstart(&mut self) {
        self.state.best_inputs = shift_hotstart(&self.state.best_inputs, self.n_u);
    }

    /// Runs one receding-horizon solve from the measured state and returns
    /// the first input of the optimized sequence.
    pub fn solve_tick<M: ContinuousModel>(
        &mut self,
        prob: &HorizonProblem<M>,
        t0: f64,
        x0: &DVector<f64>,
    ) -> DVector<f64> {
        assert!(self.settings.max_sqp_iters >= 1);
        let m = prob.constraint_count();
        // hot starts may sit outside the box after shifting; clamping removes
        // the trivially removable part of the initial infeasibility
        prob.clamp_inputs(&mut self.state.best_inputs);
        let hot_start = self.state.best_inputs.clone();
        let mut inputs = hot_start.clone();
        let (mut lambda, mut y) = if self.settings.warm_start_duals
            && self.state.multipliers.len() == m
            && self.state.multipliers.iter().all(|v| v.is_finite())
            && self.state.slacks.iter().all(|v| v.is_finite())
        {
            (self.state.multipliers.clone(), self.state.slacks.clone())
        } else {
            (DVector::from_element(m, 1.0), DVector::from_element(m, 1.0))
        };

        self.state.trace.clear();
        self.state.last_qp_iterations = 0;
        let mut status = SolveStatus::IterLimit;
        let mut iterations = 0;

        for iteration in 1..=self.settings.max_sqp_iters {
            iterations = iteration;
            let lin = match prob.linearize(t0, x0, &inputs) {
                Ok(lin) => lin,
                Err(_) => {
                    // hot start rolls out into divergence: nothing to optimize
                    status = SolveStatus::QpFailure;
                    inputs = hot_start.clone();
                    break;
                }
            };
            if let Some(dir) = self.dump_dir(iteration) {
                let _ = prob.dump_linearization(&lin, &dir);
            }
            let sub = QpSubproblem {
                hessian_factor: lin.sqrt_hessian.clone(),
                gradient: lin.gradient.clone(),
                constraint_matrix: lin.constraint_matrix.clone(),
                constraint_rhs: lin.constraint_rhs.clone(),
            };
            if let Some(dir) = self.dump_dir(iteration) {
                let _ = crate::qp::dump_subproblem(&sub, &dir);
            }
            let qp_out = match solve_qp(&sub, &lambda, &y, &self.settings.qp) {
                Ok(out) => out,
                Err(_) => {
                    status = SolveStatus::QpFailure;
                    inputs = hot_start.clone();
                    break;
                }
            };
            self.state.last_qp_iterations += qp_out.iterations_used;
            let mut diag = SqpIterationDiag {
                cost: lin.cost_value,
                residual_norm_sq: lin.residual.dot(&lin.residual),
                violation: positive_part_l1(&lin.constraint_rhs),
                qp_iterations: qp_out.iterations_used,
                alpha: 0.0,
                accepted: false,
                step_inf_norm: 0.0,
            };
            // alpha <= 1, so a negligible p* cannot become a meaningful step
            if qp_out.step.amax() <= self.settings.step_tol {
                self.state.trace.push(diag);
                status = SolveStatus::Optimal;
                break;
            }
            let outcome = line_search(
                prob,
                t0,
                x0,
                &mut inputs,
                &mut lambda,
                &mut y,
                &lin,
                &qp_out,
                &self.settings.line_search,
            );
            diag.alpha = outcome.alpha;
            diag.accepted = outcome.accepted;
            diag.step_inf_norm = outcome.step_inf_norm;
            self.state.trace.push(diag);
            if outcome.converged {
                status = if outcome.stalled_infeasible {
                    SolveStatus::StalledInfeasible
                } else {
                    SolveStatus::Optimal
                };
                break;
            }
            if outcome.step_inf_norm <= self.settings.step_tol {
                status = SolveStatus::Optimal;
                break;
            }
        }

        // cost of the final sequence; one cheap rollout keeps the reported
        // value in sync even when the loop exits right after an acceptance
        self.state.last_cost = crate::integrator::simulate(
            prob.plant(),
            t0,
            x0,
            &inputs,
            prob.disc(),
            prob.divergence_bound(),
        )
        .map(|traj| prob.cost(&traj, &inputs))
        .unwrap_or(f64::NAN);
        self.state.best_inputs = inputs;
        self.state.multipliers = lambda;
        self.state.slacks = y;
        self.state.last_iterations = iterations;
        self.state.status = status;
        self.state.best_inputs.rows(0, self.n_u).into_owned()
    }

    fn dump_dir(&self, iteration: usize) -> Option<std::path::PathBuf> {
        self.settings
            .debug_dump
            .as_ref()
            .map(|base| base.join(format!("iter{iteration:03}")))
    }
}
