//! Analytic cart-pendulum model.
//!
//! A cart of mass `M` slides on a rail, driven by a horizontal force `F`,
//! with a pendulum of mass `m` on a massless rod of length `l` hinged to it.
//! Both joints have viscous damping (`b` on the cart, `c` on the hinge).
//! The state ordering is `[p_dot, p, theta_dot, theta]` with `theta = 0`
//! upright; the angle is deliberately not wrapped so the model stays smooth
//! for linearization (wrapping is a display concern).
//!
//! All accelerations share the denominator
//! `psi(theta) = (M+m) m l^2 - m^2 l^2 cos^2(theta)`, which is bounded below
//! by `M m l^2 > 0` for any angle.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use thiserror::Error;

use crate::integrator::ContinuousModel;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{0} must be positive and finite")]
    NotPositive(&'static str),
    #[error("{0} must be non-negative and finite")]
    Negative(&'static str),
}

/// Physical parameters of the cart-pendulum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Cart mass `M` (kg).
    pub cart_mass: f64,
    /// Pendulum point mass `m` (kg).
    pub pend_mass: f64,
    /// Rod length `l` (m).
    pub pend_length: f64,
    /// Viscous damping on the cart `b` (N s/m).
    pub cart_damping: f64,
    /// Viscous damping on the hinge `c` (N m s).
    pub pend_damping: f64,
    /// Gravitational acceleration `g` (m/s^2).
    pub gravity: f64,
}

impl Default for PlantParams {
    /// Benchtop-scale rig. Every closed-loop scenario reads its parameters
    /// from a config file, so these defaults carry no correctness weight.
    fn default() -> Self {
        Self {
            cart_mass: 0.5,
            pend_mass: 0.2,
            pend_length: 0.3,
            cart_damping: 0.1,
            pend_damping: 0.01,
            gravity: 9.8,
        }
    }
}

impl PlantParams {
    pub fn new(
        cart_mass: f64,
        pend_mass: f64,
        pend_length: f64,
        cart_damping: f64,
        pend_damping: f64,
        gravity: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            cart_mass,
            pend_mass,
            pend_length,
            cart_damping,
            pend_damping,
            gravity,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            (self.cart_mass, "cart_mass"),
            (self.pend_mass, "pend_mass"),
            (self.pend_length, "pend_length"),
            (self.gravity, "gravity"),
        ];
        for (v, name) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::NotPositive(name));
            }
        }
        let non_negative = [
            (self.cart_damping, "cart_damping"),
            (self.pend_damping, "pend_damping"),
        ];
        for (v, name) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::Negative(name));
            }
        }
        Ok(())
    }

    /// Common denominator `psi(theta)` of both accelerations.
    pub fn denominator(&self, pend_angle: f64) -> f64 {
        let (m_cart, m_pend, len) = (self.cart_mass, self.pend_mass, self.pend_length);
        let cos = pend_angle.cos();
        (m_cart + m_pend) * m_pend * len * len - m_pend * m_pend * len * len * cos * cos
    }

    /// Continuous-time state derivative `[p_ddot, p_dot, theta_ddot, theta_dot]`.
    pub fn ode(&self, x: &Vector4<f64>, force: f64) -> Vector4<f64> {
        let (m_cart, m_pend, len) = (self.cart_mass, self.pend_mass, self.pend_length);
        let (b, c, g) = (self.cart_damping, self.pend_damping, self.gravity);
        let (p_dot, _p, th_dot, th) = (x[0], x[1], x[2], x[3]);
        let (sin, cos) = (th.sin(), th.cos());
        let psi = self.denominator(th);
        // shared numerator pieces
        let thrust = force + m_pend * len * th_dot * th_dot * sin - b * p_dot;
        let swing = m_pend * len * g * sin - c * th_dot;
        let beta_p = m_pend * len * len * thrust - m_pend * len * cos * swing;
        let beta_th = -m_pend * len * cos * thrust + (m_cart + m_pend) * swing;
        Vector4::new(beta_p / psi, p_dot, beta_th / psi, th_dot)
    }

    /// Exact Jacobian of [`Self::ode`] with respect to the state.
    ///
    /// Rows 2 and 4 are the constant selector rows `[1,0,0,0]` and
    /// `[0,0,1,0]`; the position column is identically zero because `p`
    /// never enters the dynamics.
    pub fn ode_jac_state(&self, x: &Vector4<f64>, force: f64) -> Matrix4<f64> {
        let (m_cart, m_pend, len) = (self.cart_mass, self.pend_mass, self.pend_length);
        let (b, c, g) = (self.cart_damping, self.pend_damping, self.gravity);
        let (p_dot, _p, th_dot, th) = (x[0], x[1], x[2], x[3]);
        let (sin, cos) = (th.sin(), th.cos());
        let psi = self.denominator(th);

        let thrust = force + m_pend * len * th_dot * th_dot * sin - b * p_dot;
        let swing = m_pend * len * g * sin - c * th_dot;
        let beta_p = m_pend * len * len * thrust - m_pend * len * cos * swing;
        let beta_th = -m_pend * len * cos * thrust + (m_cart + m_pend) * swing;

        // d(psi^-1)/dtheta, with psi factored as m l^2 (M + m - m cos^2).
        let reduced = m_cart + m_pend - m_pend * cos * cos;
        let dpsi_inv = -(2.0 * th).sin() / (len * len * reduced * reduced);

        let dbeta_p_dth = m_pend * m_pend * len.powi(3) * th_dot * th_dot * cos
            - m_pend * len * c * th_dot * sin
            - m_pend * m_pend * len * len * g * (2.0 * th).cos();
        let dbeta_th_dth = m_pend * len * sin * thrust
            - (m_pend * len * th_dot * cos).powi(2)
            + (m_cart + m_pend) * m_pend * len * g * cos;

        let mut jac = Matrix4::zeros();
        // cart acceleration row
        jac[(0, 0)] = -b * m_pend * len * len / psi;
        jac[(0, 2)] = (2.0 * m_pend * m_pend * len.powi(3) * th_dot * sin
            + c * m_pend * len * cos)
            / psi;
        jac[(0, 3)] = dbeta_p_dth / psi + beta_p * dpsi_inv;
        // cart velocity row
        jac[(1, 0)] = 1.0;
        // pendulum acceleration row
        jac[(2, 0)] = m_pend * len * b * cos / psi;
        jac[(2, 2)] = (-m_pend * m_pend * len * len * th_dot * (2.0 * th).sin()
            - c * (m_cart + m_pend))
            / psi;
        jac[(2, 3)] = dbeta_th_dth / psi + beta_th * dpsi_inv;
        // pendulum rate row
        jac[(3, 2)] = 1.0;
        jac
    }

    /// Exact Jacobian of [`Self::ode`] with respect to the force.
    pub fn ode_jac_input(&self, x: &Vector4<f64>) -> Vector4<f64> {
        let (m_cart, m_pend, len) = (self.cart_mass, self.pend_mass, self.pend_length);
        let cos = x[3].cos();
        // m l^2 / psi simplified; tests assert equality with the quotient form
        let dpddot = 1.0 / (m_cart + m_pend * (1.0 - cos * cos));
        let dthddot = -m_pend * len * cos / self.denominator(x[3]);
        Vector4::new(dpddot, 0.0, dthddot, 0.0)
    }
}

impl ContinuousModel for PlantParams {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn derivative(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let dx = self.ode(&Vector4::from_column_slice(x.as_slice()), u[0]);
        DVector::from_column_slice(dx.as_slice())
    }

    fn jac_state(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let jac = self.ode_jac_state(&Vector4::from_column_slice(x.as_slice()), u[0]);
        DMatrix::from_column_slice(4, 4, jac.as_slice())
    }

    fn jac_input(&self, _t: f64, x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        let jac = self.ode_jac_input(&Vector4::from_column_slice(x.as_slice()));
        DMatrix::from_column_slice(4, 1, jac.as_slice())
    }
}

/// Cart-pendulum state, in the exact ordering used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    /// Cart velocity `p_dot` (m/s).
    pub cart_vel: f64,
    /// Cart position `p` (m).
    pub cart_pos: f64,
    /// Pendulum angular rate `theta_dot` (rad/s).
    pub pend_rate: f64,
    /// Pendulum angle `theta` (rad), zero upright, unwrapped.
    pub pend_angle: f64,
}

impl State {
    pub fn new(cart_vel: f64, cart_pos: f64, pend_rate: f64, pend_angle: f64) -> Self {
        Self {
            cart_vel,
            cart_pos,
            pend_rate,
            pend_angle,
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.cart_vel,
            self.cart_pos,
            self.pend_rate,
            self.pend_angle,
        ])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            cart_vel: v[0],
            cart_pos: v[1],
            pend_rate: v[2],
            pend_angle: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cart_vel.is_finite()
            && self.cart_pos.is_finite()
            && self.pend_rate.is_finite()
            && self.pend_angle.is_finite()
    }
}

/// Force applied to the cart. The plant has a single input; everything above
/// the plant treats the input dimension generically.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Input {
    /// Horizontal force `F` (N).
    pub force: f64,
}

impl Input {
    pub fn new(force: f64) -> Self {
        Self { force }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_element(1, self.force)
    }
}
