//! Fixed-step Euler discretization with sensitivity propagation.
//!
//! One control interval of width `dt` is split into `slices` equal Euler
//! substeps. Alongside the state, the discrete transition Jacobians
//! `d x_{k+1} / d x_k` and `d x_{k+1} / d u_k` are accumulated from the
//! continuous-model Jacobians:
//!
//! ```text
//! A_i = I + delta * g_x(x_i, u)
//! X  <- A_i X          (product, newest factor on the left)
//! U  <- A_i U + delta * g_u(x_i, u)
//! x  <- x + delta * g(x_i, u)
//! ```
//!
//! The input is held constant over the whole interval.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// A continuous-time process model `xdot = g(t, x, u)` with analytic
/// Jacobians. The slice start time `t` is threaded through so time-variant
/// models can be plugged in; the cart-pendulum ignores it.
pub trait ContinuousModel {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn derivative(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn jac_state(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
    fn jac_input(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
}

/// Linear time-invariant model `xdot = A x + B u`, used as a surrogate plant
/// in tests and for problems where Gauss-Newton is exact.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        assert_eq!(a.nrows(), b.nrows());
        Self { a, b }
    }
}

impl ContinuousModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn derivative(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jac_state(&self, _t: f64, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn jac_input(&self, _t: f64, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DiscretizationError {
    #[error("control interval dt must be positive and finite")]
    BadInterval,
    #[error("slice count must be at least 1")]
    BadSliceCount,
}

/// Euler discretization grid: control interval `dt` split into `slices`
/// equal parts of width `dt / slices`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig {
    pub dt: f64,
    pub slices: usize,
}

impl DiscretizationConfig {
    pub fn new(dt: f64, slices: usize) -> Result<Self, DiscretizationError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DiscretizationError::BadInterval);
        }
        if slices < 1 {
            return Err(DiscretizationError::BadSliceCount);
        }
        Ok(Self { dt, slices })
    }

    pub fn slice_width(&self) -> f64 {
        self.dt / self.slices as f64
    }

    /// Same grid with `factor` times as many slices.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt,
            slices: self.slices * factor,
        }
    }
}

/// One discrete step together with its transition Jacobians.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub next_state: DVector<f64>,
    /// `d x_{k+1} / d x_k`
    pub jac_state: DMatrix<f64>,
    /// `d x_{k+1} / d u_k`
    pub jac_input: DMatrix<f64>,
}

/// Default magnitude bound beyond which a rollout is reported as diverged.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
#[error("trajectory diverged at step {step}: state component {component} is {value:e} (bound {bound:e})")]
pub struct DivergenceError {
    pub step: usize,
    pub component: usize,
    pub value: f64,
    pub bound: f64,
}

/// Integrates one control interval and accumulates both transition
/// Jacobians. Non-finite values propagate to the caller unchanged.
pub fn euler_step_with_sensitivities<M: ContinuousModel + ?Sized>(
    model: &M,
    t0: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    cfg: &DiscretizationConfig,
) -> StepResult {
    let n_x = model.state_dim();
    let delta = cfg.slice_width();
    let mut state = x.clone();
    let mut jac_state = DMatrix::identity(n_x, n_x);
    let mut jac_input = DMatrix::zeros(n_x, model.input_dim());
    for i in 0..cfg.slices {
        let t = t0 + i as f64 * delta;
        let mut a = model.jac_state(t, &state, u);
        a *= delta;
        for d in 0..n_x {
            a[(d, d)] += 1.0;
        }
        jac_state = &a * jac_state;
        jac_input = &a * jac_input + model.jac_input(t, &state, u) * delta;
        // identical update expression to euler_propagate, so that rollouts
        // with and without sensitivities agree bit-for-bit
        state += model.derivative(t, &state, u) * delta;
    }
    StepResult {
        next_state: state,
        jac_state,
        jac_input,
    }
}

/// Integrates one control interval without sensitivities. Bit-identical to
/// the state produced by [`euler_step_with_sensitivities`] on the same grid.
pub fn euler_propagate<M: ContinuousModel + ?Sized>(
    model: &M,
    t0: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    cfg: &DiscretizationConfig,
) -> DVector<f64> {
    let delta = cfg.slice_width();
    let mut state = x.clone();
    for i in 0..cfg.slices {
        let t = t0 + i as f64 * delta;
        state += model.derivative(t, &state, u) * delta;
    }
    state
}

/// States and per-step transition Jacobians of a full horizon rollout.
///
/// `states[k]` is `x_{k+2}` in the 1-based convention where `x_1` is the
/// measured start: the cost touches `x_2 ..= x_{N+1}` and those are exactly
/// the entries stored here.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub states: Vec<DVector<f64>>,
    pub jac_states: Vec<DMatrix<f64>>,
    pub jac_inputs: Vec<DMatrix<f64>>,
}

fn check_divergence(
    state: &DVector<f64>,
    step: usize,
    bound: f64,
) -> Result<(), DivergenceError> {
    for (component, &v) in state.iter().enumerate() {
        if !v.is_finite() || v.abs() > bound {
            return Err(DivergenceError {
                step,
                component,
                value: v,
                bound,
            });
        }
    }
    Ok(())
}

/// Sequential application of [`euler_step_with_sensitivities`] over a flat
/// input sequence of `N = inputs.len() / input_dim` steps.
pub fn rollout<M: ContinuousModel + ?Sized>(
    model: &M,
    t0: f64,
    x0: &DVector<f64>,
    inputs: &DVector<f64>,
    cfg: &DiscretizationConfig,
    divergence_bound: f64,
) -> Result<RolloutResult, DivergenceError> {
    let n_u = model.input_dim();
    assert!(n_u > 0 && inputs.len().is_multiple_of(n_u));
    let horizon = inputs.len() / n_u;
    let mut result = RolloutResult {
        states: Vec::with_capacity(horizon),
        jac_states: Vec::with_capacity(horizon),
        jac_inputs: Vec::with_capacity(horizon),
    };
    let mut state = x0.clone();
    for k in 0..horizon {
        let u = inputs.rows(k * n_u, n_u).into_owned();
        let step = euler_step_with_sensitivities(model, t0 + k as f64 * cfg.dt, &state, &u, cfg);
        state = step.next_state.clone();
        check_divergence(&state, k, divergence_bound)?;
        result.states.push(step.next_state);
        result.jac_states.push(step.jac_state);
        result.jac_inputs.push(step.jac_input);
    }
    Ok(result)
}

/// States-only rollout for line-search trial points; roughly an order of
/// magnitude cheaper than [`rollout`].
pub fn simulate<M: ContinuousModel + ?Sized>(
    model: &M,
    t0: f64,
    x0: &DVector<f64>,
    inputs: &DVector<f64>,
    cfg: &DiscretizationConfig,
    divergence_bound: f64,
) -> Result<Vec<DVector<f64>>, DivergenceError> {
    let n_u = model.input_dim();
    assert!(n_u > 0 && inputs.len().is_multiple_of(n_u));
    let horizon = inputs.len() / n_u;
    let mut states = Vec::with_capacity(horizon);
    let mut state = x0.clone();
    for k in 0..horizon {
        let u = inputs.rows(k * n_u, n_u).into_owned();
        state = euler_propagate(model, t0 + k as f64 * cfg.dt, &state, &u, cfg);
        check_divergence(&state, k, divergence_bound)?;
        states.push(state.clone());
    }
    Ok(states)
}
