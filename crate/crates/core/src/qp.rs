//! Dense convex QP solver: Mehrotra's predictor-corrector interior-point
//! method for
//!
//! ```text
//! min 1/2 p' H p + g' p   subject to   A p >= b
//! ```
//!
//! The Hessian is supplied as an upper-triangular factor `R` with
//! `R' R = H`, so every application of `H^{-1}` is two triangular solves and
//! no explicit inverse is ever formed. Each Newton system
//!
//! ```text
//! [ H        0        -A'      ] [dp ]   [v1]
//! [ A       -I         0       ] [dy ] = [v2]
//! [ 0      diag(l)    diag(y)  ] [dl ]   [v3]
//! ```
//!
//! is solved by block elimination down to one m-by-m system:
//!
//! ```text
//! zeta = (diag(y) + diag(l) A H^{-1} A')^{-1} (v3 - diag(l)(A H^{-1} v1 - v2))
//! dp   = H^{-1} v1 + H^{-1} A' zeta
//! dy   = A dp - v2
//! dl   = zeta
//! ```
//!
//! The inner matrix is factored with partially pivoted LU; it is not
//! symmetric as written and no symmetrizing rescaling is applied.

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, DVector, Dyn};
use thiserror::Error;

/// One local quadratic model, as produced by the SQP layer.
#[derive(Debug, Clone)]
pub struct QpSubproblem {
    /// Upper-triangular `R` with `R' R = H`; strictly positive diagonal.
    pub hessian_factor: DMatrix<f64>,
    pub gradient: DVector<f64>,
    /// `m x n` constraint matrix; `m` may be zero.
    pub constraint_matrix: DMatrix<f64>,
    pub constraint_rhs: DVector<f64>,
}

impl QpSubproblem {
    /// Number of decision variables.
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// Number of inequality rows.
    pub fn constraint_count(&self) -> usize {
        self.constraint_rhs.len()
    }

    /// `H^{-1} v` via two triangular solves against the factor.
    fn h_solve(&self, v: &DVector<f64>) -> Option<DVector<f64>> {
        let half = self.hessian_factor.tr_solve_upper_triangular(v)?;
        self.hessian_factor.solve_upper_triangular(&half)
    }

    /// `H^{-1} M` column-wise.
    fn h_solve_mat(&self, m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let half = self.hessian_factor.tr_solve_upper_triangular(m)?;
        self.hessian_factor.solve_upper_triangular(&half)
    }

    /// `H v` as `R'(R v)`.
    fn h_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.hessian_factor.tr_mul(&(&self.hessian_factor * v))
    }

    /// Dense `H = R' R`, for diagnostics and offline comparison only.
    pub fn dense_hessian(&self) -> DMatrix<f64> {
        self.hessian_factor.tr_mul(&self.hessian_factor)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QpSettings {
    /// Iteration budget `n`.
    pub max_iters: usize,
    /// Fraction-to-boundary parameter, in (0, 1).
    pub tau: f64,
    /// Push tau toward 1 as the complementarity measure shrinks
    /// (`tau_k = max(tau, 1 - mu_k)`).
    pub adaptive_tau: bool,
    /// Exit once both mu and the KKT residual fall below this.
    pub residual_tol: f64,
    /// When false, always run the full `max_iters` iterations.
    pub early_exit: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iters: 30,
            tau: 0.995,
            adaptive_tau: false,
            residual_tol: 1e-9,
            early_exit: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Step direction `p*`.
    pub step: DVector<f64>,
    /// Multipliers `lambda*` (componentwise >= 0).
    pub multipliers: DVector<f64>,
    /// Slacks `y*` (componentwise >= 0).
    pub slacks: DVector<f64>,
    pub iterations_used: usize,
    /// `max(|H p + g - A' l|_inf, |y - A p + b|_inf)` at exit.
    pub kkt_residual: f64,
}

#[derive(Debug, Error)]
pub enum QpError {
    #[error("singular KKT system at interior-point iteration {iteration} (mu = {mu:.3e})")]
    SingularKkt { iteration: usize, mu: f64 },
    #[error("blocked step (alpha = 0) at interior-point iteration {iteration} (mu = {mu:.3e})")]
    BlockedStep { iteration: usize, mu: f64 },
}

/// Newton directions `(dp, dy, dlambda)` of one structured KKT solve.
pub type KktDirections = (DVector<f64>, DVector<f64>, DVector<f64>);

/// Largest `alpha` in (0, 1] with `alpha * v >= r`, intended for `r <= 0`.
///
/// Components with `v_i >= 0` never bind; each `v_i < 0` caps the step at
/// `r_i / v_i`. A cap of exactly zero (some `v_i < 0` with `r_i = 0`)
/// signals a degenerate iterate and is returned as 0 for the caller to
/// handle.
pub fn step_length(v: &DVector<f64>, r: &DVector<f64>) -> f64 {
    let mut alpha = 1.0f64;
    for (&vi, &ri) in v.iter().zip(r.iter()) {
        if vi < 0.0 {
            alpha = alpha.min(ri / vi);
        }
    }
    alpha
}

/// Precomputed quantities that depend on the subproblem only:
/// `H^{-1} A'` and the inner product `S = A H^{-1} A'`.
struct Reduction {
    h_inv_at: DMatrix<f64>,
    s: DMatrix<f64>,
}

impl Reduction {
    fn new(sub: &QpSubproblem) -> Option<Self> {
        let at = sub.constraint_matrix.transpose();
        let h_inv_at = sub.h_solve_mat(&at)?;
        let s = &sub.constraint_matrix * &h_inv_at;
        Some(Self { h_inv_at, s })
    }

    /// Factor `diag(y) + diag(lambda) S` for the current iterate.
    fn factor(&self, lambda: &DVector<f64>, y: &DVector<f64>) -> LU<f64, Dyn, Dyn> {
        let m = y.len();
        let mut inner = self.s.clone();
        for i in 0..m {
            inner.row_mut(i).scale_mut(lambda[i]);
            inner[(i, i)] += y[i];
        }
        inner.lu()
    }

    /// Back-solve for one right-hand side given the factored inner system.
    fn solve(
        &self,
        sub: &QpSubproblem,
        inner_lu: &LU<f64, Dyn, Dyn>,
        lambda: &DVector<f64>,
        h_inv_v1: &DVector<f64>,
        v2: &DVector<f64>,
        v3: &DVector<f64>,
    ) -> Option<KktDirections> {
        let a = &sub.constraint_matrix;
        let correction = (a * h_inv_v1 - v2).component_mul(lambda);
        let zeta = inner_lu.solve(&(v3 - correction))?;
        let dp = h_inv_v1 + &self.h_inv_at * &zeta;
        let dy = a * &dp - v2;
        Some((dp, dy, zeta))
    }
}

/// Solves one Newton system against the structured KKT matrix.
///
/// Requires `lambda > 0` and `y > 0` componentwise and a nonsingular factor.
pub fn solve_kkt(
    sub: &QpSubproblem,
    lambda: &DVector<f64>,
    y: &DVector<f64>,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    v3: &DVector<f64>,
) -> Result<KktDirections, QpError> {
    let singular = |_| QpError::SingularKkt {
        iteration: 0,
        mu: complementarity(lambda, y),
    };
    if sub.constraint_count() == 0 {
        let dp = sub.h_solve(v1).ok_or_else(|| singular(()))?;
        return Ok((dp, DVector::zeros(0), DVector::zeros(0)));
    }
    let reduction = Reduction::new(sub).ok_or_else(|| singular(()))?;
    let inner_lu = reduction.factor(lambda, y);
    let h_inv_v1 = sub.h_solve(v1).ok_or_else(|| singular(()))?;
    reduction
        .solve(sub, &inner_lu, lambda, &h_inv_v1, v2, v3)
        .ok_or_else(|| singular(()))
}

fn complementarity(lambda: &DVector<f64>, y: &DVector<f64>) -> f64 {
    if lambda.is_empty() {
        0.0
    } else {
        y.dot(lambda) / lambda.len() as f64
    }
}

fn kkt_residual(sub: &QpSubproblem, p: &DVector<f64>, lambda: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let stationarity = sub.h_apply(p) + &sub.gradient
        - sub.constraint_matrix.tr_mul(lambda);
    let mut residual = stationarity.amax();
    if sub.constraint_count() > 0 {
        let primal = y - &sub.constraint_matrix * p + &sub.constraint_rhs;
        residual = residual.max(primal.amax());
    }
    residual
}

/// Runs the predictor-corrector iteration from `p = 0`.
///
/// `lambda0` and `y0` come from the caller (the SQP layer warm-starts them
/// across iterations); a floor of 1e-8 keeps the start strictly interior.
/// With no constraints the interior-point loop is skipped entirely and the
/// unconstrained minimizer `p = -H^{-1} g` is returned.
pub fn solve_qp(
    sub: &QpSubproblem,
    lambda0: &DVector<f64>,
    y0: &DVector<f64>,
    settings: &QpSettings,
) -> Result<QpSolution, QpError> {
    assert!(
        settings.tau > 0.0 && settings.tau < 1.0,
        "fraction-to-boundary parameter must lie strictly inside (0, 1)"
    );
    let m = sub.constraint_count();
    if m == 0 {
        let step = sub
            .h_solve(&(-&sub.gradient))
            .ok_or(QpError::SingularKkt { iteration: 0, mu: 0.0 })?;
        let kkt = kkt_residual(sub, &step, &DVector::zeros(0), &DVector::zeros(0));
        return Ok(QpSolution {
            step,
            multipliers: DVector::zeros(0),
            slacks: DVector::zeros(0),
            iterations_used: 0,
            kkt_residual: kkt,
        });
    }

    let mut p = DVector::zeros(sub.dim());
    let mut lambda = lambda0.map(|v| v.max(1e-8));
    let mut y = y0.map(|v| v.max(1e-8));
    let reduction = Reduction::new(sub).ok_or(QpError::SingularKkt {
        iteration: 0,
        mu: complementarity(&lambda, &y),
    })?;

    let mut iterations_used = 0;
    for iteration in 1..=settings.max_iters {
        iterations_used = iteration;
        let mu = complementarity(&lambda, &y);
        let singular = QpError::SingularKkt { iteration, mu };

        let v1 = sub.constraint_matrix.tr_mul(&lambda) - &sub.gradient - sub.h_apply(&p);
        let v2 = &y - &sub.constraint_matrix * &p + &sub.constraint_rhs;
        let h_inv_v1 = match sub.h_solve(&v1) {
            Some(v) => v,
            None => return Err(singular),
        };
        let inner_lu = reduction.factor(&lambda, &y);

        // affine (predictor) probe: sigma = 0
        let v3_affine = -lambda.component_mul(&y);
        let Some((_, dy_aff, dl_aff)) =
            reduction.solve(sub, &inner_lu, &lambda, &h_inv_v1, &v2, &v3_affine)
        else {
            return Err(singular);
        };
        let alpha_affine = step_length(&dy_aff, &(-&y)).min(step_length(&dl_aff, &(-&lambda)));
        let mu_affine =
            (&y + &dy_aff * alpha_affine).dot(&(&lambda + &dl_aff * alpha_affine)) / m as f64;
        let sigma = (mu_affine / mu).powi(3);

        // corrector: recenter and compensate the affine complementarity product
        let v3 = -lambda.component_mul(&y) - dl_aff.component_mul(&dy_aff)
            + DVector::from_element(m, sigma * mu);
        let Some((dp, dy, dl)) = reduction.solve(sub, &inner_lu, &lambda, &h_inv_v1, &v2, &v3)
        else {
            return Err(singular);
        };

        let tau = if settings.adaptive_tau {
            settings.tau.max(1.0 - mu)
        } else {
            settings.tau
        };
        let alpha = step_length(&dy, &(&y * -tau)).min(step_length(&dl, &(&lambda * -tau)));
        if alpha <= 0.0 {
            // the fraction-to-boundary rule only returns 0 on a degenerate
            // iterate; accept it as converged when complementarity is tiny
            if mu < 1e-6 {
                break;
            }
            return Err(QpError::BlockedStep { iteration, mu });
        }

        p += &dp * alpha;
        y += &dy * alpha;
        lambda += &dl * alpha;

        if settings.early_exit {
            let mu_next = complementarity(&lambda, &y);
            if mu_next <= settings.residual_tol
                && kkt_residual(sub, &p, &lambda, &y) <= settings.residual_tol
            {
                break;
            }
        }
    }

    let kkt = kkt_residual(sub, &p, &lambda, &y);
    Ok(QpSolution {
        step: p,
        multipliers: lambda,
        slacks: y,
        iterations_used,
        kkt_residual: kkt,
    })
}

/// Writes (H, g, A, b) as CSV files into `dir` for offline comparison
/// against external solvers. `H` is reconstructed from its factor.
pub fn dump_subproblem(sub: &QpSubproblem, dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::dump::write_matrix_csv(&dir.join("H.csv"), &sub.dense_hessian())?;
    crate::dump::write_vector_csv(&dir.join("g.csv"), &sub.gradient)?;
    crate::dump::write_matrix_csv(&dir.join("A.csv"), &sub.constraint_matrix)?;
    crate::dump::write_vector_csv(&dir.join("b.csv"), &sub.constraint_rhs)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmpc_testkit::{active_set_qp, dense_kkt_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_factor(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    /// Random upper-triangular factor with diagonal bounded away from zero.
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

    fn random_subproblem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QpSubproblem {
        QpSubproblem {
            hessian_factor: random_factor(rng, n),
            gradient: DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
            constraint_matrix: DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0)),
            constraint_rhs: DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0)),
        }
    }

    #[test]
    fn step_length_casework() {
        let one = step_length(
            &DVector::from_vec(vec![1.0, 2.0]),
            &DVector::from_vec(vec![-1.0, -1.0]),
        );
        assert_eq!(one, 1.0);
        let half = step_length(&DVector::from_vec(vec![-2.0]), &DVector::from_vec(vec![-1.0]));
        assert_eq!(half, 0.5);
        // min(1, 1/4, 1, 1/0.5 capped) = 0.25
        let quarter = step_length(
            &DVector::from_vec(vec![-4.0, 1.0, -0.5]),
            &DVector::from_vec(vec![-1.0, -3.0, -1.0]),
        );
        assert_eq!(quarter, 0.25);
        // degenerate: negative direction against a zero radius blocks entirely
        let blocked = step_length(&DVector::from_vec(vec![-1.0]), &DVector::from_vec(vec![0.0]));
        assert_eq!(blocked, 0.0);
    }

    #[test]
    fn kkt_unconstrained_identity_hessian() {
        let sub = QpSubproblem {
            hessian_factor: identity_factor(2),
            gradient: DVector::zeros(2),
            constraint_matrix: DMatrix::zeros(0, 2),
            constraint_rhs: DVector::zeros(0),
        };
        let v1 = DVector::from_vec(vec![3.0, -1.0]);
        let (dp, dy, dl) = solve_kkt(
            &sub,
            &DVector::zeros(0),
            &DVector::zeros(0),
            &v1,
            &DVector::zeros(0),
            &DVector::zeros(0),
        )
        .unwrap();
        assert_eq!(dp, v1);
        assert!(dy.is_empty() && dl.is_empty());
    }

    #[test]
    fn kkt_scalar_case_solved_by_hand() {
        // n = 1, m = 1, H = A = 1, lambda = y = 1, rhs (1, 0, 0):
        // dp - dl = 1, dp - dy = 0, dy + dl = 0  =>  (0.5, 0.5, -0.5)
        let sub = QpSubproblem {
            hessian_factor: identity_factor(1),
            gradient: DVector::zeros(1),
            constraint_matrix: DMatrix::from_element(1, 1, 1.0),
            constraint_rhs: DVector::zeros(1),
        };
        let ones = DVector::from_element(1, 1.0);
        let (dp, dy, dl) = solve_kkt(
            &sub,
            &ones,
            &ones,
            &DVector::from_element(1, 1.0),
            &DVector::zeros(1),
            &DVector::zeros(1),
        )
        .unwrap();
        assert!((dp[0] - 0.5).abs() < 1e-14);
        assert!((dy[0] - 0.5).abs() < 1e-14);
        assert!((dl[0] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn structured_solve_matches_dense_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200 {
            let n = rng.gen_range(1..7);
            let m = rng.gen_range(1..7);
            let sub = random_subproblem(&mut rng, n, m);
            let lambda = DVector::from_fn(m, |_, _| rng.gen_range(0.05..3.0));
            let y = DVector::from_fn(m, |_, _| rng.gen_range(0.05..3.0));
            let v1 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let v2 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let v3 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let (dp, dy, dl) = solve_kkt(&sub, &lambda, &y, &v1, &v2, &v3).unwrap();
            let (ep, ey, el) =
                dense_kkt_solve(&sub.dense_hessian(), &sub.constraint_matrix, &lambda, &y, &v1, &v2, &v3)
                    .unwrap();
            assert!((dp - ep).amax() < 1e-10, "dp mismatch on trial {trial}");
            assert!((dy - ey).amax() < 1e-10, "dy mismatch on trial {trial}");
            assert!((dl - el).amax() < 1e-10, "dl mismatch on trial {trial}");
        }
    }

    #[test]
    fn unconstrained_fast_path() {
        let sub = QpSubproblem {
            hessian_factor: identity_factor(2),
            gradient: DVector::from_vec(vec![2.0, -4.0]),
            constraint_matrix: DMatrix::zeros(0, 2),
            constraint_rhs: DVector::zeros(0),
        };
        let sol = solve_qp(&sub, &DVector::zeros(0), &DVector::zeros(0), &QpSettings::default())
            .unwrap();
        assert_eq!(sol.step, DVector::from_vec(vec![-2.0, 4.0]));
        assert_eq!(sol.iterations_used, 0);
        assert!(sol.kkt_residual < 1e-14);
    }

    #[test]
    fn clipped_scalar_minimum() {
        // min 1/2 p^2 - p  s.t.  p <= 0.5: active at the bound
        let sub = QpSubproblem {
            hessian_factor: identity_factor(1),
            gradient: DVector::from_element(1, -1.0),
            constraint_matrix: DMatrix::from_element(1, 1, -1.0),
            constraint_rhs: DVector::from_element(1, -0.5),
        };
        let ones = DVector::from_element(1, 1.0);
        let sol = solve_qp(&sub, &ones, &ones, &QpSettings::default()).unwrap();
        assert!((sol.step[0] - 0.5).abs() < 1e-7);
        assert!((sol.multipliers[0] - 0.5).abs() < 1e-6);
        assert!(sol.slacks[0].abs() < 1e-6);
    }

    fn box_constraints(
        rng: &mut ChaCha8Rng,
        n: usize,
        rows: usize,
    ) -> (DMatrix<f64>, DVector<f64>) {
        // random selection of +/- e_i rows with bounds keeping 0 feasible
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        for r in 0..rows {
            let i = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                a[(r, i)] = 1.0;
                b[r] = -rng.gen_range(0.05..1.5); // p_i >= b
            } else {
                a[(r, i)] = -1.0;
                b[r] = -rng.gen_range(0.05..1.5); // p_i <= -b
            }
        }
        (a, b)
    }

    #[test]
    fn random_qps_match_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        // a tight tolerance keeps the distance to the optimum below 1e-6
        // even for ill-conditioned draws (the gap scales like cond(H) * mu)
        let settings = QpSettings {
            residual_tol: 1e-12,
            ..QpSettings::default()
        };
        for trial in 0..150 {
            let n = rng.gen_range(1..7);
            let m = rng.gen_range(1..9);
            let factor = random_factor(&mut rng, n);
            let (a, b) = box_constraints(&mut rng, n, m);
            let sub = QpSubproblem {
                hessian_factor: factor,
                gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
                constraint_matrix: a,
                constraint_rhs: b,
            };
            let ones = DVector::from_element(m, 1.0);
            let sol = solve_qp(&sub, &ones, &ones, &settings).unwrap();
            let oracle = active_set_qp(
                &sub.dense_hessian(),
                &sub.gradient,
                &sub.constraint_matrix,
                &sub.constraint_rhs,
                1e-9,
            )
            .unwrap();
            assert!(
                (&sol.step - &oracle.step).amax() <= 1e-6,
                "trial {trial}: ipm {} vs oracle {}",
                sol.step,
                oracle.step
            );
            assert!(sol.kkt_residual <= 1e-6, "trial {trial}");
        }
    }

    #[test]
    fn iterates_stay_strictly_positive_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..5);
            let m = rng.gen_range(1..6);
            let factor = random_factor(&mut rng, n);
            let (a, b) = box_constraints(&mut rng, n, m);
            let sub = QpSubproblem {
                hessian_factor: factor,
                gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
                constraint_matrix: a,
                constraint_rhs: b,
            };
            let ones = DVector::from_element(m, 1.0);
            let sol = solve_qp(&sub, &ones, &ones, &QpSettings::default()).unwrap();
            assert!(sol.multipliers.iter().all(|&l| l > 0.0));
            assert!(sol.slacks.iter().all(|&s| s > 0.0));
            let mu_exit = sol.slacks.dot(&sol.multipliers) / m as f64;
            assert!(mu_exit <= 1.0 + 1e-12, "mu grew beyond its start value");
        }
    }

    #[test]
    fn residual_contract_at_exit() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let m = rng.gen_range(1..8);
            let factor = random_factor(&mut rng, n);
            let (a, b) = box_constraints(&mut rng, n, m);
            let sub = QpSubproblem {
                hessian_factor: factor,
                gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
                constraint_matrix: a,
                constraint_rhs: b,
            };
            let ones = DVector::from_element(m, 1.0);
            let sol = solve_qp(&sub, &ones, &ones, &QpSettings::default()).unwrap();
            let stationarity = (sub.dense_hessian() * &sol.step + &sub.gradient
                - sub.constraint_matrix.tr_mul(&sol.multipliers))
                .amax();
            assert!(stationarity <= 1e-6 * (1.0 + sub.gradient.amax()));
            let primal =
                (&sol.slacks - &sub.constraint_matrix * &sol.step + &sub.constraint_rhs).amax();
            assert!(primal <= 1e-6 * (1.0 + sub.constraint_rhs.amax()));
        }
    }

    #[test]
    fn scaling_leaves_unconstrained_argmin_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 5;
        let factor = random_factor(&mut rng, n);
        let gradient = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let solve = |scale: f64| {
            let sub = QpSubproblem {
                hessian_factor: &factor * scale.sqrt(),
                gradient: &gradient * scale,
                constraint_matrix: DMatrix::zeros(0, n),
                constraint_rhs: DVector::zeros(0),
            };
            solve_qp(&sub, &DVector::zeros(0), &DVector::zeros(0), &QpSettings::default())
                .unwrap()
                .step
        };
        let base = solve(1.0);
        // power-of-two scaling keeps every intermediate exactly representable
        assert_eq!(base, solve(4.0));
        assert!((&base - solve(3.0)).amax() < 1e-12);
    }

    #[test]
    fn fixed_iteration_mode_runs_the_full_budget() {
        let sub = QpSubproblem {
            hessian_factor: identity_factor(1),
            gradient: DVector::from_element(1, -1.0),
            constraint_matrix: DMatrix::from_element(1, 1, -1.0),
            constraint_rhs: DVector::from_element(1, -0.5),
        };
        let ones = DVector::from_element(1, 1.0);
        let settings = QpSettings {
            early_exit: false,
            max_iters: 12,
            ..QpSettings::default()
        };
        let sol = solve_qp(&sub, &ones, &ones, &settings).unwrap();
        assert_eq!(sol.iterations_used, 12);
        assert!((sol.step[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn complementarity_never_grows_from_random_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..40 {
            let n = rng.gen_range(1..5);
            let m = rng.gen_range(1..6);
            let factor = random_factor(&mut rng, n);
            let (a, b) = box_constraints(&mut rng, n, m);
            let sub = QpSubproblem {
                hessian_factor: factor,
                gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
                constraint_matrix: a,
                constraint_rhs: b,
            };
            let lambda0 = DVector::from_fn(m, |_, _| rng.gen_range(0.1..4.0));
            let y0 = DVector::from_fn(m, |_, _| rng.gen_range(0.1..4.0));
            let entry_mu = y0.dot(&lambda0) / m as f64;
            let sol = solve_qp(&sub, &lambda0, &y0, &QpSettings::default()).unwrap();
            let exit_mu = sol.slacks.dot(&sol.multipliers) / m as f64;
            assert!(exit_mu <= entry_mu * (1.0 + 1e-12));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn radius_vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            prop::collection::vec((-10.0f64..10.0, -10.0f64..0.0), 1..12)
                .prop_map(|pairs| pairs.into_iter().unzip())
        }

        proptest! {
            /// alpha stays in [0, 1] and alpha * v >= r holds componentwise
            /// for the non-positive radii the solver feeds in.
            #[test]
            fn step_length_is_feasible((v, r) in radius_vectors()) {
                let v = DVector::from_vec(v);
                let r = DVector::from_vec(r);
                let alpha = step_length(&v, &r);
                prop_assert!((0.0..=1.0).contains(&alpha));
                for i in 0..v.len() {
                    prop_assert!(alpha * v[i] >= r[i] - 1e-12 * r[i].abs());
                }
            }
        }
    }

    #[test]
    fn adaptive_tau_still_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let settings = QpSettings {
            adaptive_tau: true,
            ..QpSettings::default()
        };
        for _ in 0..30 {
            let n = rng.gen_range(1..5);
            let m = rng.gen_range(1..6);
            let factor = random_factor(&mut rng, n);
            let (a, b) = box_constraints(&mut rng, n, m);
            let sub = QpSubproblem {
                hessian_factor: factor,
                gradient: DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
                constraint_matrix: a,
                constraint_rhs: b,
            };
            let ones = DVector::from_element(m, 1.0);
            let sol = solve_qp(&sub, &ones, &ones, &settings).unwrap();
            let oracle = active_set_qp(
                &sub.dense_hessian(),
                &sub.gradient,
                &sub.constraint_matrix,
                &sub.constraint_rhs,
                1e-9,
            )
            .unwrap();
            assert!((&sol.step - &oracle.step).amax() <= 1e-6);
        }
    }
}
