//! Nonlinear model-predictive control of a cart-pendulum.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: the analytic cart-pendulum model (state derivative and its
//!   exact Jacobians with respect to state and input);
//! - [`integrator`]: fixed-step Euler discretization that co-propagates the
//!   discrete transition Jacobians;
//! - [`qp`]: a dense Mehrotra predictor-corrector interior-point solver for
//!   inequality-constrained convex QPs, with a structured KKT back-solve;
//! - [`sqp`]: the Gauss-Newton layer that turns a horizon rollout into a QP
//!   subproblem (square-root Hessian via QR row updates, linearized box
//!   constraints) plus the backtracking merit line search;
//! - [`nmpc`]: the receding-horizon controller tying the pieces together,
//!   with hot-start shifting and graceful degradation on solver failure.

pub mod dynamics;
pub mod integrator;
pub mod nmpc;
pub mod qp;
pub mod sqp;

mod dump;

pub use dynamics::{Input, PlantParams, State};
pub use integrator::{ContinuousModel, DiscretizationConfig, LinearModel, StepResult};
pub use nmpc::{ControllerState, NmpcController, NmpcSettings, SolveStatus};
pub use qp::{QpSettings, QpSolution, QpSubproblem};
pub use sqp::{HorizonProblem, Linearization, LineSearchSettings};
