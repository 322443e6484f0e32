//! Gauss-Newton SQP layer.
//!
//! The horizon cost
//!
//! ```text
//! V(u) = sum_{k=1..N} x_{k+1}' Q x_{k+1} + u_k' R u_k
//! ```
//!
//! is factored as `V(u) = e(u)' e(u)` with the stacked residual
//! `e(u) = [Q^{1/2} x_2; ..; Q^{1/2} x_{N+1}; R^{1/2} u_1; ..; R^{1/2} u_N]`.
//! Linearizing `e` gives the Gauss-Newton model with `H = J'J` and
//! `g = J'e`. `J`'s top is block lower-triangular (the model is causal), its
//! bottom is blockdiag(R^{1/2}); the `R` penalty keeps `H` positive definite.
//!
//! Rather than forming `H`, the upper-triangular factor of a Q-less QR
//! decomposition of `J` is accumulated band by band with Givens rotations,
//! seeded from blockdiag(R^{1/2}); the gradient accumulates alongside it.
//! Box constraints on inputs and on selected state rows are linearized into
//! `A p >= b` with `b = c(u*)`, reusing the raw (unweighted) sensitivity
//! blocks already computed for `J`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::integrator::{
    rollout, simulate, ContinuousModel, DiscretizationConfig, DivergenceError,
    DEFAULT_DIVERGENCE_BOUND,
};
use crate::qp::QpSolution;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("{0} has the wrong dimension")]
    Dimension(&'static str),
    #[error("state weight matrix must be symmetric positive semidefinite")]
    StateWeightNotPsd,
    #[error("input weight matrix must be symmetric positive definite")]
    InputWeightNotPd,
    #[error("bounds must satisfy lower < upper and not be NaN")]
    BadBounds,
}

/// Full definition of one finite-horizon problem: model, grid, weights and
/// bounds. Construction validates everything and precomputes the matrix
/// square roots used by the residual stack.
#[derive(Debug, Clone)]
pub struct HorizonProblem<M> {
    plant: M,
    horizon: usize,
    disc: DiscretizationConfig,
    weights_q: DMatrix<f64>,
    weights_r: DMatrix<f64>,
    sqrt_q: DMatrix<f64>,
    sqrt_r: DMatrix<f64>,
    input_lower: DVector<f64>,
    input_upper: DVector<f64>,
    state_lower: Vec<Option<f64>>,
    state_upper: Vec<Option<f64>>,
    divergence_bound: f64,
}

fn symmetric_sqrt_psd(q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = q.nrows();
    let asym = (q - q.transpose()).amax();
    if asym > 1e-10 * q.amax().max(1.0) {
        return None;
    }
    let eigen = q.clone().symmetric_eigen();
    let tol = -1e-10 * eigen.eigenvalues.amax().max(1.0);
    let mut roots = DVector::zeros(n);
    for (i, &value) in eigen.eigenvalues.iter().enumerate() {
        if value < tol {
            return None;
        }
        roots[i] = value.max(0.0).sqrt();
    }
    let mut scaled = eigen.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    Some(&scaled * eigen.eigenvectors.transpose())
}

impl<M: ContinuousModel> HorizonProblem<M> {
    pub fn new(
        plant: M,
        horizon: usize,
        disc: DiscretizationConfig,
        weights_q: DMatrix<f64>,
        weights_r: DMatrix<f64>,
        input_lower: DVector<f64>,
        input_upper: DVector<f64>,
    ) -> Result<Self, ProblemError> {
        if horizon == 0 {
            return Err(ProblemError::BadHorizon);
        }
        let n_x = plant.state_dim();
        let n_u = plant.input_dim();
        if weights_q.shape() != (n_x, n_x) {
            return Err(ProblemError::Dimension("state weight matrix"));
        }
        if weights_r.shape() != (n_u, n_u) {
            return Err(ProblemError::Dimension("input weight matrix"));
        }
        if input_lower.len() != n_u || input_upper.len() != n_u {
            return Err(ProblemError::Dimension("input bounds"));
        }
        for i in 0..n_u {
            let (lo, hi) = (input_lower[i], input_upper[i]);
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ProblemError::BadBounds);
            }
        }
        let sqrt_q = symmetric_sqrt_psd(&weights_q).ok_or(ProblemError::StateWeightNotPsd)?;
        let sqrt_r = weights_r
            .clone()
            .cholesky()
            .ok_or(ProblemError::InputWeightNotPd)?
            .l()
            .transpose();
        Ok(Self {
            plant,
            horizon,
            disc,
            weights_q,
            weights_r,
            sqrt_q,
            sqrt_r,
            input_lower,
            input_upper,
            state_lower: vec![None; n_x],
            state_upper: vec![None; n_x],
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        })
    }

    /// Constrains one state component to `lower <= x_i <= upper` over the
    /// whole horizon. Either side may be `None`; only the needed constraint
    /// rows are generated.
    pub fn with_state_bound(
        mut self,
        state_index: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<Self, ProblemError> {
        if state_index >= self.n_x() {
            return Err(ProblemError::Dimension("state bound index"));
        }
        if lower.is_some_and(f64::is_nan) || upper.is_some_and(f64::is_nan) {
            return Err(ProblemError::BadBounds);
        }
        if let (Some(lo), Some(hi)) = (lower, upper) {
            if lo >= hi {
                return Err(ProblemError::BadBounds);
            }
        }
        self.state_lower[state_index] = lower.filter(|v| v.is_finite());
        self.state_upper[state_index] = upper.filter(|v| v.is_finite());
        Ok(self)
    }

    pub fn with_divergence_bound(mut self, bound: f64) -> Self {
        self.divergence_bound = bound;
        self
    }

    pub fn plant(&self) -> &M {
        &self.plant
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn disc(&self) -> &DiscretizationConfig {
        &self.disc
    }

    pub fn n_x(&self) -> usize {
        self.plant.state_dim()
    }

    pub fn n_u(&self) -> usize {
        self.plant.input_dim()
    }

    /// Number of decision variables `N * n_u`.
    pub fn n_decision(&self) -> usize {
        self.horizon * self.n_u()
    }

    pub fn input_lower(&self) -> &DVector<f64> {
        &self.input_lower
    }

    pub fn input_upper(&self) -> &DVector<f64> {
        &self.input_upper
    }

    pub fn divergence_bound(&self) -> f64 {
        self.divergence_bound
    }

    /// Total number of inequality rows generated by [`Self::build_constraints`].
    pub fn constraint_count(&self) -> usize {
        let finite_lower = self.input_lower.iter().filter(|v| v.is_finite()).count();
        let finite_upper = self.input_upper.iter().filter(|v| v.is_finite()).count();
        let state_rows: usize = (0..self.n_x())
            .map(|i| {
                self.state_lower[i].map_or(0, |_| self.horizon)
                    + self.state_upper[i].map_or(0, |_| self.horizon)
            })
            .sum();
        self.horizon * (finite_lower + finite_upper) + state_rows
    }

    /// Clamps a flat input sequence into the box `[input_lower, input_upper]`.
    pub fn clamp_inputs(&self, inputs: &mut DVector<f64>) {
        let n_u = self.n_u();
        for (idx, value) in inputs.iter_mut().enumerate() {
            let channel = idx % n_u;
            *value = value.clamp(self.input_lower[channel], self.input_upper[channel]);
        }
    }

    /// Horizon cost accumulated term by term (no residual vector is formed).
    pub fn cost(&self, trajectory: &[DVector<f64>], inputs: &DVector<f64>) -> f64 {
        let n_u = self.n_u();
        let mut total = 0.0;
        for (k, state) in trajectory.iter().enumerate() {
            total += (&self.weights_q * state).dot(state);
            let u = inputs.rows(k * n_u, n_u);
            total += (&self.weights_r * u).dot(&u);
        }
        total
    }

    /// Stacked residual `e(u)`: weighted states first, weighted inputs after.
    pub fn build_residual(&self, trajectory: &[DVector<f64>], inputs: &DVector<f64>) -> DVector<f64> {
        let (n_x, n_u, n) = (self.n_x(), self.n_u(), self.horizon);
        assert_eq!(trajectory.len(), n);
        let mut e = DVector::zeros(n * (n_x + n_u));
        for (k, state) in trajectory.iter().enumerate() {
            e.rows_mut(k * n_x, n_x).copy_from(&(&self.sqrt_q * state));
        }
        let base = n * n_x;
        for k in 0..n {
            let u = inputs.rows(k * n_u, n_u);
            e.rows_mut(base + k * n_u, n_u).copy_from(&(&self.sqrt_r * u));
        }
        e
    }

    /// Raw sensitivity blocks `S[k][j] = d x_{k+2} / d u_j` (0-based), built
    /// by the forward recursion `S[k][j] = F_k S[k-1][j]`, `S[k][k] = G_k`.
    /// These are the Jacobian top blocks without the `Q^{1/2}` weighting;
    /// the state-constraint rows reuse them directly.
    pub fn sensitivity_blocks(
        &self,
        jac_states: &[DMatrix<f64>],
        jac_inputs: &[DMatrix<f64>],
    ) -> Vec<Vec<DMatrix<f64>>> {
        let n = self.horizon;
        let mut blocks: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = Vec::with_capacity(k + 1);
            for j in 0..k {
                row.push(&jac_states[k] * &blocks[k - 1][j]);
            }
            row.push(jac_inputs[k].clone());
            blocks.push(row);
        }
        blocks
    }

    /// Dense Jacobian of the residual stack: block lower-triangular top,
    /// blockdiag(R^{1/2}) bottom. Used by tests, dumps and oracles; the
    /// solver itself goes through the QR accumulation below.
    pub fn build_jacobian(&self, sens: &[Vec<DMatrix<f64>>]) -> DMatrix<f64> {
        let (n_x, n_u, n) = (self.n_x(), self.n_u(), self.horizon);
        let mut jac = DMatrix::zeros(n * (n_x + n_u), n * n_u);
        for (k, row) in sens.iter().enumerate() {
            for (j, block) in row.iter().enumerate() {
                jac.view_mut((k * n_x, j * n_u), (n_x, n_u))
                    .copy_from(&(&self.sqrt_q * block));
            }
        }
        let base = n * n_x;
        for k in 0..n {
            jac.view_mut((base + k * n_u, k * n_u), (n_u, n_u))
                .copy_from(&self.sqrt_r);
        }
        jac
    }

    /// Accumulates the square-root Hessian and the gradient from the Jacobian
    /// row bands, without ever forming `J` or `H`.
    ///
    /// The factor starts as blockdiag(R^{1/2}) (the bottom of `J`) and each
    /// band of `n_x` rows is folded in with Givens rotations; the shrinking
    /// zero tail of each band bounds the rotation work. The gradient starts
    /// as `[R u_1; ..; R u_N]` and accumulates `J_k' (Q^{1/2} x_{k+1})`.
    pub fn build_sqrt_hessian_and_gradient(
        &self,
        sens: &[Vec<DMatrix<f64>>],
        trajectory: &[DVector<f64>],
        inputs: &DVector<f64>,
    ) -> (DMatrix<f64>, DVector<f64>) {
        let (n_x, n_u, n) = (self.n_x(), self.n_u(), self.horizon);
        let dim = n * n_u;
        let mut factor = DMatrix::zeros(dim, dim);
        let mut gradient = DVector::zeros(dim);
        for k in 0..n {
            factor
                .view_mut((k * n_u, k * n_u), (n_u, n_u))
                .copy_from(&self.sqrt_r);
            let u = inputs.rows(k * n_u, n_u);
            gradient
                .rows_mut(k * n_u, n_u)
                .copy_from(&(&self.weights_r * u));
        }
        let mut band = DMatrix::zeros(n_x, dim);
        for (k, row) in sens.iter().enumerate() {
            let width = (k + 1) * n_u;
            for (j, block) in row.iter().enumerate() {
                band.view_mut((0, j * n_u), (n_x, n_u))
                    .copy_from(&(&self.sqrt_q * block));
            }
            let weighted_state = &self.sqrt_q * &trajectory[k];
            for j in 0..=k {
                let contribution = band.view((0, j * n_u), (n_x, n_u)).tr_mul(&weighted_state);
                let mut segment = gradient.rows_mut(j * n_u, n_u);
                segment += contribution;
            }
            qr_append_band(&mut factor, &band, width);
        }
        (factor, gradient)
    }

    /// Linearized box constraints `A p >= b` with `b = c(u*)`, stacked as:
    /// input-lower rows, input-upper rows, then per constrained state its
    /// lower rows followed by its upper rows. Rows for infinite input bounds
    /// and unconstrained states are omitted.
    pub fn build_constraints(
        &self,
        trajectory: &[DVector<f64>],
        inputs: &DVector<f64>,
        sens: &[Vec<DMatrix<f64>>],
    ) -> (DMatrix<f64>, DVector<f64>) {
        let (n_u, n) = (self.n_u(), self.horizon);
        let dim = n * n_u;
        let rows = self.constraint_count();
        let mut a = DMatrix::zeros(rows, dim);
        let mut b = DVector::zeros(rows);
        let mut r = 0;
        for idx in 0..dim {
            let lo = self.input_lower[idx % n_u];
            if lo.is_finite() {
                a[(r, idx)] = 1.0;
                b[r] = lo - inputs[idx];
                r += 1;
            }
        }
        for idx in 0..dim {
            let hi = self.input_upper[idx % n_u];
            if hi.is_finite() {
                a[(r, idx)] = -1.0;
                b[r] = inputs[idx] - hi;
                r += 1;
            }
        }
        for i in 0..self.n_x() {
            if let Some(lo) = self.state_lower[i] {
                for (k, row) in sens.iter().enumerate() {
                    for (j, block) in row.iter().enumerate() {
                        a.view_mut((r, j * n_u), (1, n_u)).copy_from(&block.row(i));
                    }
                    b[r] = lo - trajectory[k][i];
                    r += 1;
                }
            }
            if let Some(hi) = self.state_upper[i] {
                for (k, row) in sens.iter().enumerate() {
                    for (j, block) in row.iter().enumerate() {
                        a.view_mut((r, j * n_u), (1, n_u))
                            .copy_from(&(-block.row(i)));
                    }
                    b[r] = trajectory[k][i] - hi;
                    r += 1;
                }
            }
        }
        debug_assert_eq!(r, rows);
        (a, b)
    }

    /// Constraint function `c(u)` evaluated at an arbitrary trajectory, in
    /// the exact row order of [`Self::build_constraints`]. Feasible means
    /// every component <= 0.
    pub fn constraint_values(
        &self,
        trajectory: &[DVector<f64>],
        inputs: &DVector<f64>,
    ) -> DVector<f64> {
        let (n_u, n) = (self.n_u(), self.horizon);
        let dim = n * n_u;
        let mut c = DVector::zeros(self.constraint_count());
        let mut r = 0;
        for idx in 0..dim {
            let lo = self.input_lower[idx % n_u];
            if lo.is_finite() {
                c[r] = lo - inputs[idx];
                r += 1;
            }
        }
        for idx in 0..dim {
            let hi = self.input_upper[idx % n_u];
            if hi.is_finite() {
                c[r] = inputs[idx] - hi;
                r += 1;
            }
        }
        for i in 0..self.n_x() {
            if let Some(lo) = self.state_lower[i] {
                for state in trajectory.iter() {
                    c[r] = lo - state[i];
                    r += 1;
                }
            }
            if let Some(hi) = self.state_upper[i] {
                for state in trajectory.iter() {
                    c[r] = state[i] - hi;
                    r += 1;
                }
            }
        }
        c
    }

    /// Rolls out the model from `x0` under `inputs` and assembles the full
    /// local quadratic model about that trajectory.
    pub fn linearize(
        &self,
        t0: f64,
        x0: &DVector<f64>,
        inputs: &DVector<f64>,
    ) -> Result<Linearization, DivergenceError> {
        let roll = rollout(&self.plant, t0, x0, inputs, &self.disc, self.divergence_bound)?;
        let sens = self.sensitivity_blocks(&roll.jac_states, &roll.jac_inputs);
        let residual = self.build_residual(&roll.states, inputs);
        let (sqrt_hessian, gradient) =
            self.build_sqrt_hessian_and_gradient(&sens, &roll.states, inputs);
        let (constraint_matrix, constraint_rhs) =
            self.build_constraints(&roll.states, inputs, &sens);
        let cost_value = self.cost(&roll.states, inputs);
        Ok(Linearization {
            residual,
            sqrt_hessian,
            gradient,
            constraint_matrix,
            constraint_rhs,
            cost_value,
            trajectory: roll.states,
            sensitivities: sens,
        })
    }

    /// Writes the linearization (e, J, A, b, V) as CSV into `dir`.
    pub fn dump_linearization(
        &self,
        lin: &Linearization,
        dir: &std::path::Path,
    ) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::dump::write_vector_csv(&dir.join("e.csv"), &lin.residual)?;
        crate::dump::write_matrix_csv(&dir.join("J.csv"), &self.build_jacobian(&lin.sensitivities))?;
        crate::dump::write_matrix_csv(&dir.join("A.csv"), &lin.constraint_matrix)?;
        crate::dump::write_vector_csv(&dir.join("b.csv"), &lin.constraint_rhs)?;
        crate::dump::write_scalar(&dir.join("V.csv"), lin.cost_value)?;
        Ok(())
    }
}

/// Local quadratic model of the horizon problem about one input sequence.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// Stacked residual `e(u)`.
    pub residual: DVector<f64>,
    /// Upper-triangular factor with `R'R = J'J`.
    pub sqrt_hessian: DMatrix<f64>,
    /// `g = J'e`.
    pub gradient: DVector<f64>,
    pub constraint_matrix: DMatrix<f64>,
    pub constraint_rhs: DVector<f64>,
    /// `V(u)`, accumulated term by term; equals `e'e` up to rounding.
    pub cost_value: f64,
    /// Predicted states `x_2 ..= x_{N+1}`.
    pub trajectory: Vec<DVector<f64>>,
    /// Raw sensitivity blocks, kept for constraint rows and debug dumps.
    pub sensitivities: Vec<Vec<DMatrix<f64>>>,
}

impl Linearization {
    /// Violation measure `v_c(u*) = |b|_1^+` of the linearization point.
    pub fn violation(&self) -> f64 {
        positive_part_l1(&self.constraint_rhs)
    }
}

/// Folds `band` rows into the upper-triangular accumulator `r` with Givens
/// rotations. Only the first `width` columns of both the band and the
/// affected rows of `r` are nonzero at this point of the accumulation, so
/// rotations stop there.
fn qr_append_band(r: &mut DMatrix<f64>, band: &DMatrix<f64>, width: usize) {
    let mut row = vec![0.0; width];
    for band_row in 0..band.nrows() {
        for (c, value) in row.iter_mut().enumerate() {
            *value = band[(band_row, c)];
        }
        for c in 0..width {
            let v = row[c];
            if v == 0.0 {
                continue;
            }
            let d = r[(c, c)];
            let radius = d.hypot(v);
            let (cos, sin) = (d / radius, v / radius);
            r[(c, c)] = radius;
            for j in (c + 1)..width {
                let upper = r[(c, j)];
                let incoming = row[j];
                r[(c, j)] = cos * upper + sin * incoming;
                row[j] = cos * incoming - sin * upper;
            }
        }
    }
}

/// Sum of the positive components of `v`.
pub fn positive_part_l1(v: &DVector<f64>) -> f64 {
    v.iter().filter(|&&x| x > 0.0).sum()
}

/// Predicted reduction of the constraint violation along the step:
/// `vbar = sum over violated rows (b_i > 0) of min(b_i, alpha * a_i)` with
/// `a = A p*` computed once per line search.
pub fn predicted_violation_reduction(
    constraint_rhs: &DVector<f64>,
    a: &DVector<f64>,
    alpha: f64,
) -> f64 {
    constraint_rhs
        .iter()
        .zip(a.iter())
        .filter(|(&b, _)| b > 0.0)
        .map(|(&b, &ai)| b.min(alpha * ai))
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct LineSearchSettings {
    /// Backtracking budget `n_L`.
    pub max_backtracks: usize,
    /// Sufficient-decrease factor for the cost test, in (0, 1).
    pub armijo_eta: f64,
    /// Sufficient-decrease factor for the violation test, in (0, 1).
    pub violation_eta: f64,
    /// Step shrink factor per backtrack, in (0, 1).
    pub shrink: f64,
}

impl Default for LineSearchSettings {
    fn default() -> Self {
        Self {
            max_backtracks: 20,
            armijo_eta: 1e-4,
            violation_eta: 0.1,
            shrink: 0.5,
        }
    }
}

/// What the line search did with the proposed step.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchOutcome {
    pub accepted: bool,
    /// Every backtrack failed and the iterate is unchanged; the SQP loop
    /// treats this as its stopping signal.
    pub converged: bool,
    /// The converged flag was raised while the current iterate still
    /// violates constraints; calling that "converged" would be misleading,
    /// so it is reported apart.
    pub stalled_infeasible: bool,
    /// Step fraction at acceptance (1.0 on the first try).
    pub alpha: f64,
    /// `|alpha p*|_inf` of the accepted step, 0 when nothing was accepted.
    pub step_inf_norm: f64,
    pub trial_cost: Option<f64>,
    pub trial_violation: Option<f64>,
}

/// Backtracking merit line search over the separated cost / violation pair.
///
/// From `alpha = 1`: roll the trial point out; while the current iterate is
/// infeasible, accept on sufficient violation reduction against the
/// prediction `vbar`; once feasible, accept on the Armijo test against `V`.
/// A diverging trial rollout counts as a failed test. On acceptance the
/// multipliers and slacks are interpolated toward the QP's `(lambda*, y*)`
/// and `inputs` is replaced by the trial point.
#[allow(clippy::too_many_arguments)]
pub fn line_search<M: ContinuousModel>(
    prob: &HorizonProblem<M>,
    t0: f64,
    x0: &DVector<f64>,
    inputs: &mut DVector<f64>,
    lambda: &mut DVector<f64>,
    y: &mut DVector<f64>,
    lin: &Linearization,
    qp_out: &QpSolution,
    settings: &LineSearchSettings,
) -> LineSearchOutcome {
    assert!(settings.max_backtracks >= 1);
    assert!(settings.armijo_eta > 0.0 && settings.armijo_eta < 1.0);
    assert!(settings.violation_eta > 0.0 && settings.violation_eta < 1.0);
    assert!(settings.shrink > 0.0 && settings.shrink < 1.0);
    let step = &qp_out.step;
    let violation_at_point = positive_part_l1(&lin.constraint_rhs);
    let feasible = violation_at_point == 0.0;
    let predicted = &lin.constraint_matrix * step;
    let slope = step.dot(&lin.gradient);

    let mut alpha = 1.0;
    for _ in 0..settings.max_backtracks {
        let trial = &*inputs + step * alpha;
        let Ok(trajectory) = simulate(
            &prob.plant,
            t0,
            x0,
            &trial,
            &prob.disc,
            prob.divergence_bound,
        ) else {
            alpha *= settings.shrink;
            continue;
        };
        let trial_c = prob.constraint_values(&trajectory, &trial);
        let trial_violation = positive_part_l1(&trial_c);
        let passed = if !feasible {
            let vbar = predicted_violation_reduction(&lin.constraint_rhs, &predicted, alpha);
            trial_violation <= violation_at_point - settings.violation_eta * vbar
        } else {
            let trial_cost = prob.cost(&trajectory, &trial);
            trial_cost <= lin.cost_value + settings.armijo_eta * alpha * slope
        };
        if passed {
            let trial_cost = prob.cost(&trajectory, &trial);
            let step_inf_norm = (step * alpha).amax();
            *inputs = trial;
            *lambda += (&qp_out.multipliers - &*lambda) * alpha;
            *y += (&qp_out.slacks - &*y) * alpha;
            return LineSearchOutcome {
                accepted: true,
                converged: false,
                stalled_infeasible: false,
                alpha,
                step_inf_norm,
                trial_cost: Some(trial_cost),
                trial_violation: Some(trial_violation),
            };
        }
        alpha *= settings.shrink;
    }
    LineSearchOutcome {
        accepted: false,
        converged: true,
        stalled_infeasible: !feasible,
        alpha: 0.0,
        step_inf_norm: 0.0,
        trial_cost: None,
        trial_violation: None,
    }
}
