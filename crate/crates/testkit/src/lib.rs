//! Brute-force reference computations for checking the solver stack.
//!
//! Everything in this crate is deliberately naive: dense assembly, explicit
//! inverses, exhaustive enumeration, finite differences. None of it shares
//! code with the implementations it is used to verify, so agreement between
//! the two routes is meaningful evidence.

use nalgebra::{DMatrix, DVector};

/// Central finite-difference Jacobian of `f` at `x`.
///
/// The step for column `i` is `1e-6 * max(1, |x_i|)` unless `step` overrides it.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, step: Option<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let y0 = f(x);
    let mut jac = DMatrix::zeros(y0.len(), n);
    for i in 0..n {
        let h = step.unwrap_or_else(|| 1e-6 * x[i].abs().max(1.0));
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(i, &col);
    }
    jac
}

/// Worst relative error between `a` and `b`, with differences below
/// `abs_floor` treated as zero.
pub fn max_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>, abs_floor: f64) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let diff = (x - y).abs();
        if diff < abs_floor {
            continue;
        }
        worst = worst.max(diff / y.abs().max(abs_floor));
    }
    worst
}

/// Assembles the full primal-dual Newton matrix
///
/// ```text
/// [ H        0        -A^T     ]
/// [ A       -I         0       ]
/// [ 0      diag(l)    diag(y)  ]
/// ```
///
/// and solves it with dense LU. Used to cross-check the structured
/// block-elimination back-solve.
#[allow(clippy::too_many_arguments)]
pub fn dense_kkt_solve(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambda: &DVector<f64>,
    y: &DVector<f64>,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    v3: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = h.nrows();
    let m = a.nrows();
    let dim = n + 2 * m;
    let mut psi = DMatrix::zeros(dim, dim);
    psi.view_mut((0, 0), (n, n)).copy_from(h);
    psi.view_mut((0, n + m), (n, m)).copy_from(&(-a.transpose()));
    psi.view_mut((n, 0), (m, n)).copy_from(a);
    for i in 0..m {
        psi[(n + i, n + i)] = -1.0;
        psi[(n + m + i, n + i)] = lambda[i];
        psi[(n + m + i, n + m + i)] = y[i];
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(v1);
    rhs.rows_mut(n, m).copy_from(v2);
    rhs.rows_mut(n + m, m).copy_from(v3);
    let sol = psi.lu().solve(&rhs)?;
    Some((
        sol.rows(0, n).into_owned(),
        sol.rows(n, m).into_owned(),
        sol.rows(n + m, m).into_owned(),
    ))
}

/// Globally optimal solution of `min 1/2 p'Hp + g'p  s.t.  Ap >= b` found by
/// exhaustive enumeration of active sets.
pub struct ActiveSetSolution {
    pub step: DVector<f64>,
    pub objective: f64,
}

/// Enumerates all `2^m` candidate active sets, solves the corresponding
/// equality-constrained QP for each, and returns the feasible candidate with
/// the lowest objective. Only practical for tiny problems; `H` must be
/// strictly convex so the optimum is unique.
pub fn active_set_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    feas_tol: f64,
) -> Option<ActiveSetSolution> {
    let n = h.nrows();
    let m = a.nrows();
    assert!(m < 20, "active-set enumeration is exponential in m");
    let objective = |p: &DVector<f64>| 0.5 * (h * p).dot(p) + g.dot(p);
    let mut best: Option<ActiveSetSolution> = None;
    for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let na = active.len();
        if na > n {
            continue; // more equalities than unknowns: either redundant or infeasible
        }
        // KKT system for the equality-constrained subproblem:
        //   [ H  -A_W^T ] [p ]   [-g ]
        //   [ A_W   0   ] [lm] = [b_W]
        let dim = n + na;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-g));
        for (row, &ci) in active.iter().enumerate() {
            for col in 0..n {
                kkt[(col, n + row)] = -a[(ci, col)];
                kkt[(n + row, col)] = a[(ci, col)];
            }
            rhs[n + row] = b[ci];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let p = sol.rows(0, n).into_owned();
        let resid = a * &p - b;
        if resid.iter().any(|&r| r < -feas_tol) {
            continue;
        }
        let obj = objective(&p);
        if best.as_ref().is_none_or(|s| obj < s.objective) {
            best = Some(ActiveSetSolution { step: p, objective: obj });
        }
    }
    best
}

/// Closed-form result of `M`-slice forward Euler on the LTI system
/// `xdot = A x + B u` with `u` held constant:
///
/// ```text
/// x+  = (I + dA)^M x + [sum_{j=0}^{M-1} (I + dA)^j dB] u,   d = dt / M
/// ```
///
/// Computed by explicit matrix powers, independently of any recurrence.
pub fn lti_euler_reference(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
    slices: usize,
) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let d = dt / slices as f64;
    let ad = DMatrix::identity(n, n) + a * d;
    let bd = b * d;
    let mut power = DMatrix::identity(n, n); // ad^j
    let mut input_jac = DMatrix::zeros(n, b.ncols());
    for _ in 0..slices {
        input_jac += &power * &bd;
        power = &ad * &power;
    }
    let next = &power * x + &input_jac * u;
    (next, power, input_jac)
}

/// Gauss-Newton step from the stacked least-squares problem:
/// `p = -(J^T J)^{-1} J^T e`, solved densely via the normal equations.
pub fn gauss_newton_step(jac: &DMatrix<f64>, residual: &DVector<f64>) -> Option<DVector<f64>> {
    let jtj = jac.transpose() * jac;
    let jte = jac.transpose() * residual;
    jtj.lu().solve(&(-jte))
}
