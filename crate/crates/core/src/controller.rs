//! Harmonic reference trajectory and the CLF tracking controller.
//!
//! The controller drives the tracking error `e = qd - x` onto the manifold
//! `gamma1*e_dot + gamma2*e = 0` by enforcing an exact exponential decay of
//! the control Lyapunov function
//!
//! ```text
//! V = 1/2 (gamma1*e_dot + gamma2*e)^2,    V_dot = -k V.
//! ```
//!
//! Writing `s = gamma1*e_dot + gamma2*e`, the decay condition is equivalent
//! to `gamma1*e_ddot + gamma2*e_dot = -(k/2) s`, which yields the commanded
//! acceleration
//!
//! ```text
//! xdd_cmd = qd_ddot + (gamma2/gamma1) e_dot + (k/(2 gamma1)) s
//! ```
//!
//! and the input follows by exact inverse dynamics of the plant model:
//!
//! ```text
//! u = (1 + eps1 x^2) xdd_cmd + delta v + eps1 x v^2
//!     + lin_stiffness x + eps2 x^3 - forcing_amp cos(forcing_freq t).
//! ```
//!
//! On the manifold `s = 0` the position error obeys
//! `e_dot = -(gamma2/gamma1) e`, so the gain ratio sets the error decay rate
//! while `k` sets how fast the manifold itself is reached.

use serde::{Deserialize, Serialize};

use crate::dynamics::{PlantParams, PlantState};
use crate::error::{Error, Result};

/// CLF gains and decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Velocity-error gain in the CLF manifold variable.
    pub gamma1: f64,
    /// Position-error gain in the CLF manifold variable.
    pub gamma2: f64,
    /// Prescribed decay rate of V (1/s).
    pub k: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            gamma1: 12.0,
            gamma2: 4.0,
            k: 115.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma1 == 0.0 || !self.gamma1.is_finite() {
            return Err(Error::GainDegenerate);
        }
        if !(self.k >= 0.0) || !self.gamma2.is_finite() {
            return Err(Error::Config(format!(
                "controller gains must be finite with k >= 0 (gamma2={}, k={})",
                self.gamma2, self.k
            )));
        }
        Ok(())
    }
}

/// Sine-series reference: `qd(t) = sum_i a_i sin(i * base_freq * t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSignal {
    /// `(harmonic index, amplitude)` pairs with strictly increasing indices.
    pub harmonics: Vec<(u32, f64)>,
    /// Angular frequency of the fundamental (rad/s).
    pub base_freq: f64,
}

impl Default for ReferenceSignal {
    fn default() -> Self {
        Self {
            harmonics: vec![(1, 0.1), (3, 0.5), (5, 1.0)],
            base_freq: 1.0,
        }
    }
}

/// Reference position and its first two analytic derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefEval {
    pub qd: f64,
    pub qd_dot: f64,
    pub qd_ddot: f64,
}

impl ReferenceSignal {
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0u32;
        for &(idx, amp) in &self.harmonics {
            if idx == 0 || idx <= prev && prev != 0 {
                return Err(Error::Config(format!(
                    "harmonic indices must be positive and strictly increasing, got {idx}"
                )));
            }
            if !amp.is_finite() {
                return Err(Error::Config("harmonic amplitude must be finite".into()));
            }
            prev = idx;
        }
        if !self.base_freq.is_finite() {
            return Err(Error::Config("base_freq must be finite".into()));
        }
        Ok(())
    }

    /// Evaluate the reference and its exact derivatives.
    pub fn eval(&self, t: f64) -> RefEval {
        let mut qd = 0.0;
        let mut qd_dot = 0.0;
        let mut qd_ddot = 0.0;
        for &(idx, amp) in &self.harmonics {
            let w = f64::from(idx) * self.base_freq;
            let (sin, cos) = (w * t).sin_cos();
            qd += amp * sin;
            qd_dot += amp * w * cos;
            qd_ddot -= amp * w * w * sin;
        }
        RefEval { qd, qd_dot, qd_ddot }
    }
}

/// Position and velocity tracking errors `(e, e_dot)`.
pub fn tracking_error(state: &PlantState, reference: &RefEval) -> (f64, f64) {
    (reference.qd - state.x, reference.qd_dot - state.v)
}

/// CLF value `V = 1/2 (gamma1*e_dot + gamma2*e)^2`.
pub fn clf_value(e: f64, e_dot: f64, cp: &ControllerParams) -> f64 {
    let s = cp.gamma1 * e_dot + cp.gamma2 * e;
    0.5 * s * s
}

/// Inverse-dynamics control input enforcing `V_dot = -k V`.
///
/// `plant_model` is the controller's model of the plant; when it matches the
/// true plant the closed loop is exactly
/// `e_ddot = -(gamma2/gamma1) e_dot - (k/(2 gamma1)) (gamma1 e_dot + gamma2 e)`.
pub fn control_law(
    state: &PlantState,
    reference: &RefEval,
    cp: &ControllerParams,
    plant_model: &PlantParams,
) -> Result<f64> {
    if cp.gamma1 == 0.0 {
        return Err(Error::GainDegenerate);
    }
    let (e, e_dot) = tracking_error(state, reference);
    let s = cp.gamma1 * e_dot + cp.gamma2 * e;
    let xdd_cmd = reference.qd_ddot + (cp.gamma2 / cp.gamma1) * e_dot + (cp.k / (2.0 * cp.gamma1)) * s;
    let p = plant_model;
    let mass = 1.0 + p.eps1 * state.x * state.x;
    Ok(mass * xdd_cmd
        + p.delta * state.v
        + p.eps1 * state.x * state.v * state.v
        + p.lin_stiffness * state.x
        + p.eps2 * state.x.powi(3)
        - p.forcing_amp * (p.forcing_freq * state.t).cos())
}

/// Controller state carried through a closed-loop run: gains, reference, and
/// the plant model used for inverse dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfController {
    pub params: ControllerParams,
    pub reference: ReferenceSignal,
    pub model: PlantParams,
}

impl ClfController {
    pub fn new(params: ControllerParams, reference: ReferenceSignal, model: PlantParams) -> Self {
        Self {
            params,
            reference,
            model,
        }
    }

    /// Control input for the given state (reference evaluated at `state.t`).
    pub fn control(&self, state: &PlantState) -> Result<f64> {
        let r = self.reference.eval(state.t);
        control_law(state, &r, &self.params, &self.model)
    }
}
