//! Duffing-Van der Pol plant, fixed-step RK4 integration, and scripted
//! closed-loop simulation with event injection.
//!
//! The plant is the forced oscillator
//!
//! ```text
//! (1 + eps1 x^2) xdd = -delta v - eps1 x v^2 - lin_stiffness x - eps2 x^3
//!                      + u + forcing_amp cos(forcing_freq t)
//! ```
//!
//! i.e. damping enters as `-delta v` and the state-dependent factor
//! `1 + eps1 x^2` acts as an effective mass on the acceleration. The
//! `lin_stiffness` term defaults to zero; it exists so a variant with a bare
//! linear spring term can be configured without code changes.
//!
//! The control input is sampled once per step and held through the RK4
//! substages (zero-order hold at the 1 kHz control rate); `rk4_step` itself
//! accepts an arbitrary `u_of(t, x, v)` and evaluates it at every substage,
//! so callers that want continuous control can pass a feedback closure.

use serde::{Deserialize, Serialize};

use crate::adaptive::SigmaBinding;
use crate::controller::{clf_value, tracking_error, ClfController};
use crate::error::{Error, Result};
use crate::harness::SampleRecord;

/// Physical coefficients of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Linear damping coefficient.
    pub delta: f64,
    /// Nonlinear inertia/damping coefficient (multiplies `x^2 xdd + x v^2`).
    pub eps1: f64,
    /// Cubic stiffness coefficient.
    pub eps2: f64,
    /// External forcing amplitude.
    pub forcing_amp: f64,
    /// External forcing angular frequency (rad/s).
    pub forcing_freq: f64,
    /// Linear stiffness coefficient (0 in the standard model).
    pub lin_stiffness: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            eps1: 1.6,
            eps2: -0.8,
            forcing_amp: 3.0,
            forcing_freq: 10.0,
            lin_stiffness: 0.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.delta,
            self.eps1,
            self.eps2,
            self.forcing_amp,
            self.forcing_freq,
            self.lin_stiffness,
        ];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::Config("plant parameters must be finite".into()));
        }
        if self.forcing_freq < 0.0 {
            return Err(Error::Config("forcing_freq must be >= 0".into()));
        }
        Ok(())
    }
}

/// Simulation state `(t, x, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl PlantState {
    pub fn rest(t: f64) -> Self {
        Self { t, x: 0.0, v: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.v.is_finite()
    }
}

/// Partial overwrite of plant parameters; `None` fields are left untouched.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantPatch {
    pub delta: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub forcing_amp: Option<f64>,
    pub forcing_freq: Option<f64>,
    pub lin_stiffness: Option<f64>,
}

impl PlantPatch {
    pub fn apply(&self, p: &mut PlantParams) {
        if let Some(v) = self.delta {
            p.delta = v;
        }
        if let Some(v) = self.eps1 {
            p.eps1 = v;
        }
        if let Some(v) = self.eps2 {
            p.eps2 = v;
        }
        if let Some(v) = self.forcing_amp {
            p.forcing_amp = v;
        }
        if let Some(v) = self.forcing_freq {
            p.forcing_freq = v;
        }
        if let Some(v) = self.lin_stiffness {
            p.lin_stiffness = v;
        }
    }
}

/// Scripted mid-run interference.
///
/// `SetPlantParams`, `ActuatorScale`, `AdditiveDisturbance`, `ImpulseVelocity`
/// and plant-bound `SetSigmas` model external interference: they change the
/// physical system without informing the controller, whose inverse-dynamics
/// model keeps its previous coefficients. `SetControllerGains` and
/// controller-bound `SetSigmas` rewrite the controller directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventAction {
    SetControllerGains { gamma1: f64, gamma2: f64, k: f64 },
    SetSigmas { s1: f64, s2: f64 },
    SetPlantParams { patch: PlantPatch },
    ActuatorScale { factor: f64 },
    AdditiveDisturbance { amplitude: f64, freq: f64, duration: f64 },
    ImpulseVelocity { delta_v: f64 },
}

/// An action that fires once at the first control step at or after `at_time`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEvent {
    pub at_time: f64,
    #[serde(flatten)]
    pub action: EventAction,
}

// Manual deserialization: `flatten` and `deny_unknown_fields` cannot be
// combined, so pull `at_time` out of the map and parse the rest strictly.
impl<'de> Deserialize<'de> for ScenarioEvent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(deserializer)?;
        let at_time = map
            .remove("at_time")
            .ok_or_else(|| D::Error::missing_field("at_time"))?;
        let at_time = at_time
            .as_f64()
            .ok_or_else(|| D::Error::custom("at_time must be a number"))?;
        let action = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(D::Error::custom)?;
        Ok(ScenarioEvent { at_time, action })
    }
}

/// Acceleration of the plant under input `u`.
///
/// Fails with [`Error::SingularMass`] when `|1 + eps1 x^2| <= 1e-9`, which
/// can only happen for `eps1 < 0`.
pub fn plant_accel(state: &PlantState, params: &PlantParams, u: f64) -> Result<f64> {
    let mass = 1.0 + params.eps1 * state.x * state.x;
    if mass.abs() <= 1e-9 {
        return Err(Error::SingularMass { x: state.x, value: mass.abs() });
    }
    let numerator = -params.delta * state.v
        - params.eps1 * state.x * state.v * state.v
        - params.lin_stiffness * state.x
        - params.eps2 * state.x.powi(3)
        + u
        + params.forcing_amp * (params.forcing_freq * state.t).cos();
    Ok(numerator / mass)
}

/// Result of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Advanced(PlantState),
    /// The step produced a non-finite state.
    Diverged { at_time: f64 },
}

/// Classical fourth-order Runge-Kutta step of `(x, v)` over `dt`.
///
/// `u_of(t, x, v)` is evaluated at every substage.
pub fn rk4_step<F>(state: &PlantState, params: &PlantParams, u_of: F, dt: f64) -> Result<StepOutcome>
where
    F: Fn(f64, f64, f64) -> f64,
{
    assert!(dt > 0.0, "dt must be positive");
    let deriv = |t: f64, x: f64, v: f64| -> Result<(f64, f64)> {
        let s = PlantState { t, x, v };
        Ok((v, plant_accel(&s, params, u_of(t, x, v))?))
    };

    let (k1x, k1v) = deriv(state.t, state.x, state.v)?;
    let h = 0.5 * dt;
    let (k2x, k2v) = deriv(state.t + h, state.x + h * k1x, state.v + h * k1v)?;
    let (k3x, k3v) = deriv(state.t + h, state.x + h * k2x, state.v + h * k2v)?;
    let (k4x, k4v) = deriv(state.t + dt, state.x + dt * k3x, state.v + dt * k3v)?;

    let next = PlantState {
        t: state.t + dt,
        x: state.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v: state.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    };
    if next.is_finite() {
        Ok(StepOutcome::Advanced(next))
    } else {
        Ok(StepOutcome::Diverged { at_time: state.t + dt })
    }
}

/// Terminal status of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Diverged { at_time: f64 },
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged { .. } => "diverged",
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, RunStatus::Diverged { .. })
    }
}

/// One recorded control step of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    /// Input applied to the plant this step (after actuator scaling and
    /// additive disturbances).
    pub u: f64,
    pub qd: f64,
    /// Signed tracking error `qd - x`.
    pub e: f64,
    /// CLF value at this step.
    pub clf: f64,
    /// Current values of the two sigma-bound parameters.
    pub s1: f64,
    pub s2: f64,
}

/// Time series produced by [`simulate`] or the adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub status: RunStatus,
}

impl Trajectory {
    /// Dataset rows for training, with `err = |e|` capped at `cap`.
    pub fn to_records(&self, cap: f64) -> Vec<SampleRecord> {
        self.samples
            .iter()
            .map(|s| SampleRecord {
                t: s.t,
                x: s.x,
                v: s.v,
                u: s.u,
                s1: s.s1,
                s2: s.s2,
                err: s.e.abs().min(cap),
            })
            .collect()
    }

    pub fn max_abs_err_after(&self, t: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.t > t)
            .map(|s| s.e.abs())
            .fold(0.0, f64::max)
    }
}

/// Fixed-step run options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// A run is declared diverged once `|x|` exceeds this bound.
    pub divergence_bound: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 2.5,
            divergence_bound: 100.0,
        }
    }
}

/// Mutable closed-loop pieces shared by [`simulate`] and the adaptive loop.
pub(crate) struct LoopState {
    pub controller: ClfController,
    /// The physical plant being integrated (may drift from the controller's
    /// model through interference events).
    pub plant: PlantParams,
    pub state: PlantState,
    pub actuator_scale: f64,
    pub disturbances: Vec<(f64, f64, f64, f64)>, // (amplitude, freq, start, end)
    next_event: usize,
    events: Vec<ScenarioEvent>,
}

impl LoopState {
    pub fn new(
        initial: PlantState,
        plant: PlantParams,
        controller: ClfController,
        events: &[ScenarioEvent],
    ) -> Self {
        let mut events = events.to_vec();
        events.sort_by(|a, b| a.at_time.total_cmp(&b.at_time));
        Self {
            controller,
            plant,
            state: initial,
            actuator_scale: 1.0,
            disturbances: Vec::new(),
            next_event: 0,
            events,
        }
    }

    /// Fire every event due at the current grid time (each fires once).
    pub fn apply_due_events(&mut self, binding: &SigmaBinding, dt: f64) {
        while self.next_event < self.events.len() {
            let due = self.events[self.next_event].at_time <= self.state.t + dt * 0.5;
            if !due {
                break;
            }
            let ev = self.events[self.next_event].clone();
            self.next_event += 1;
            match ev.action {
                EventAction::SetControllerGains { gamma1, gamma2, k } => {
                    self.controller.params.gamma1 = gamma1;
                    self.controller.params.gamma2 = gamma2;
                    self.controller.params.k = k;
                }
                EventAction::SetSigmas { s1, s2 } => {
                    // External overwrite: plant-bound targets change the
                    // physical system only, leaving the controller model
                    // stale.
                    binding.apply_raw(
                        crate::adaptive::SigmaPair { s1, s2 },
                        &mut self.controller.params,
                        &mut self.plant,
                    );
                }
                EventAction::SetPlantParams { patch } => patch.apply(&mut self.plant),
                EventAction::ActuatorScale { factor } => self.actuator_scale *= factor,
                EventAction::AdditiveDisturbance { amplitude, freq, duration } => self
                    .disturbances
                    .push((amplitude, freq, self.state.t, self.state.t + duration)),
                EventAction::ImpulseVelocity { delta_v } => self.state.v += delta_v,
            }
        }
    }

    /// Effective plant input at time `tt` for a held command `u_cmd`.
    pub fn effective_input(&self, u_cmd: f64, tt: f64) -> f64 {
        let mut u = self.actuator_scale * u_cmd;
        for &(amplitude, freq, start, end) in &self.disturbances {
            if tt >= start && tt < end {
                u += amplitude * (freq * (tt - start)).sin();
            }
        }
        u
    }

    /// Record the current step and advance one control period.
    pub fn record_and_step(
        &mut self,
        binding: &SigmaBinding,
        opts: &SimOptions,
        step_index: usize,
        t0: f64,
        samples: &mut Vec<TrajectorySample>,
    ) -> Result<Option<RunStatus>> {
        let r = self.controller.reference.eval(self.state.t);
        let (e, e_dot) = tracking_error(&self.state, &r);
        let u_cmd = self.controller.control(&self.state)?;
        let u_applied = self.effective_input(u_cmd, self.state.t);
        let pair = binding.current(&self.controller.params, &self.plant);
        samples.push(TrajectorySample {
            t: self.state.t,
            x: self.state.x,
            v: self.state.v,
            u: u_applied,
            qd: r.qd,
            e,
            clf: clf_value(e, e_dot, &self.controller.params),
            s1: pair.s1,
            s2: pair.s2,
        });

        let scale = self.actuator_scale;
        let disturbances = self.disturbances.clone();
        let u_of = move |tt: f64, _x: f64, _v: f64| {
            let mut u = scale * u_cmd;
            for &(amplitude, freq, start, end) in &disturbances {
                if tt >= start && tt < end {
                    u += amplitude * (freq * (tt - start)).sin();
                }
            }
            u
        };
        match rk4_step(&self.state, &self.plant, u_of, opts.dt)? {
            StepOutcome::Diverged { at_time } => Ok(Some(RunStatus::Diverged { at_time })),
            StepOutcome::Advanced(next) => {
                self.state = next;
                // keep the grid exact to avoid accumulating rounding in t
                self.state.t = t0 + (step_index as f64 + 1.0) * opts.dt;
                if self.state.x.abs() > opts.divergence_bound {
                    Ok(Some(RunStatus::Diverged { at_time: self.state.t }))
                } else {
                    Ok(None)
                }
            }
        }
    }
}

/// Closed-loop fixed-step simulation with scripted events.
///
/// The control input is computed once per step from the sampled state and
/// held for the whole step. The run stops early with `Diverged` status when
/// the state leaves `|x| <= divergence_bound` or becomes non-finite; no
/// further samples are recorded after that.
pub fn simulate(
    initial: PlantState,
    plant: PlantParams,
    controller: &ClfController,
    binding: &SigmaBinding,
    events: &[ScenarioEvent],
    opts: &SimOptions,
) -> Result<Trajectory> {
    assert!(opts.dt > 0.0, "dt must be positive");
    assert!(opts.t_end > initial.t, "t_end must exceed the initial time");
    if !initial.is_finite() || initial.x.abs() > opts.divergence_bound {
        return Ok(Trajectory {
            samples: Vec::new(),
            status: RunStatus::Diverged { at_time: initial.t },
        });
    }

    let t0 = initial.t;
    let n_steps = ((opts.t_end - t0) / opts.dt).round() as usize;
    let mut looped = LoopState::new(initial, plant, controller.clone(), events);
    let mut samples = Vec::with_capacity(n_steps);

    for i in 0..n_steps {
        looped.apply_due_events(binding, opts.dt);
        if let Some(status) = looped.record_and_step(binding, opts, i, t0, &mut samples)? {
            return Ok(Trajectory { samples, status });
        }
    }
    Ok(Trajectory { samples, status: RunStatus::Completed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::SigmaBinding;
    use crate::controller::{ControllerParams, ReferenceSignal};
    use approx::assert_relative_eq;

    fn baseline() -> (PlantParams, ClfController) {
        let plant = PlantParams::default();
        let controller = ClfController::new(
            ControllerParams::default(),
            ReferenceSignal::default(),
            plant,
        );
        (plant, controller)
    }

    #[test]
    fn accel_at_rest_equals_forcing() {
        let state = PlantState::rest(0.0);
        let acc = plant_accel(&state, &PlantParams::default(), 0.0).unwrap();
        assert_eq!(acc, 3.0);
    }

    #[test]
    fn accel_hand_evaluated_at_unit_displacement() {
        // numerator = -eps2*1 + P = 0.8 + 3 = 3.8; mass = 1 + 1.6 = 2.6
        let state = PlantState { t: 0.0, x: 1.0, v: 0.0 };
        let acc = plant_accel(&state, &PlantParams::default(), 0.0).unwrap();
        assert_relative_eq!(acc, 3.8 / 2.6, epsilon = 1e-15);
    }

    #[test]
    fn accel_control_cancels_forcing() {
        let state = PlantState::rest(0.0);
        let acc = plant_accel(&state, &PlantParams::default(), -3.0).unwrap();
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn accel_singular_mass_guard() {
        let params = PlantParams { eps1: -1.0, ..Default::default() };
        let state = PlantState { t: 0.0, x: 1.0, v: 0.0 };
        assert!(matches!(
            plant_accel(&state, &params, 0.0),
            Err(Error::SingularMass { .. })
        ));
    }

    #[test]
    fn rk4_reproduces_harmonic_oscillator() {
        // xdd = -x with x(0) = 1: x(1) = cos(1)
        let params = PlantParams {
            delta: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            forcing_amp: 0.0,
            forcing_freq: 0.0,
            lin_stiffness: 1.0,
        };
        let mut state = PlantState { t: 0.0, x: 1.0, v: 0.0 };
        for _ in 0..1000 {
            state = match rk4_step(&state, &params, |_, _, _| 0.0, 1e-3).unwrap() {
                StepOutcome::Advanced(s) => s,
                StepOutcome::Diverged { .. } => panic!("diverged"),
            };
        }
        assert!((state.x - 1.0_f64.cos()).abs() < 1e-9);
        assert!((state.v + 1.0_f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn rk4_zero_dynamics_only_advances_time() {
        let params = PlantParams {
            delta: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            forcing_amp: 0.0,
            forcing_freq: 0.0,
            lin_stiffness: 0.0,
        };
        let state = PlantState { t: 1.0, x: 0.5, v: 0.0 };
        match rk4_step(&state, &params, |_, _, _| 0.0, 1e-3).unwrap() {
            StepOutcome::Advanced(s) => {
                assert_eq!(s.x, 0.5);
                assert_eq!(s.v, 0.0);
                assert_relative_eq!(s.t, 1.001, epsilon = 1e-15);
            }
            StepOutcome::Diverged { .. } => panic!("diverged"),
        }
    }

    /// Endpoint error against a dt = 1e-6 reference drops by a factor in
    /// [12, 20] when dt halves (order-4 behaviour of the uncontrolled plant).
    #[test]
    fn rk4_self_convergence_order() {
        let params = PlantParams::default();
        let endpoint = |dt: f64| -> PlantState {
            let n = (0.1 / dt).round() as usize;
            let mut s = PlantState::rest(0.0);
            for i in 0..n {
                s = match rk4_step(&s, &params, |_, _, _| 0.0, dt).unwrap() {
                    StepOutcome::Advanced(next) => next,
                    StepOutcome::Diverged { .. } => panic!("diverged"),
                };
                s.t = (i as f64 + 1.0) * dt;
            }
            s
        };
        let reference = endpoint(1e-6);
        let err = |s: PlantState| ((s.x - reference.x).powi(2) + (s.v - reference.v).powi(2)).sqrt();
        let e_coarse = err(endpoint(2e-3));
        let e_fine = err(endpoint(1e-3));
        let factor = e_coarse / e_fine;
        assert!(
            (12.0..=20.0).contains(&factor),
            "convergence factor {factor} outside [12, 20]"
        );
    }

    #[test]
    fn simulate_single_step() {
        let (plant, controller) = baseline();
        let opts = SimOptions { dt: 1e-3, t_end: 1e-3, ..Default::default() };
        let traj = simulate(
            PlantState::rest(0.0),
            plant,
            &controller,
            &SigmaBinding::default(),
            &[],
            &opts,
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.status, RunStatus::Completed);
    }

    #[test]
    fn simulate_baseline_completes_with_bounded_error() {
        let (plant, controller) = baseline();
        let traj = simulate(
            PlantState::rest(0.0),
            plant,
            &controller,
            &SigmaBinding::default(),
            &[],
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.status, RunStatus::Completed);
        assert_eq!(traj.samples.len(), 2500);
        // the closed loop with baseline gains keeps |e| well below 1
        assert!(traj.max_abs_err_after(0.0) < 0.2);
    }

    #[test]
    fn event_prefix_identity() {
        // Samples strictly before the event time are bit-identical to the
        // event-free run.
        let (plant, controller) = baseline();
        let binding = SigmaBinding::default();
        let opts = SimOptions { t_end: 1.0, ..Default::default() };
        let plain = simulate(PlantState::rest(0.0), plant, &controller, &binding, &[], &opts).unwrap();
        let events = [ScenarioEvent {
            at_time: 0.5,
            action: EventAction::ImpulseVelocity { delta_v: 5.0 },
        }];
        let bumped =
            simulate(PlantState::rest(0.0), plant, &controller, &binding, &events, &opts).unwrap();
        for (a, b) in plain.samples.iter().zip(&bumped.samples) {
            if a.t < 0.5 {
                assert_eq!(a, b, "prefix must match at t = {}", a.t);
            }
        }
        assert_ne!(
            plain.samples.last().unwrap().x,
            bumped.samples.last().unwrap().x
        );
    }

    #[test]
    fn event_fires_exactly_once() {
        let (plant, controller) = baseline();
        let binding = SigmaBinding::default();
        let opts = SimOptions { t_end: 0.2, ..Default::default() };
        let events = [ScenarioEvent {
            at_time: 0.1,
            action: EventAction::ActuatorScale { factor: 0.5 },
        }];
        let traj =
            simulate(PlantState::rest(0.0), plant, &controller, &binding, &events, &opts).unwrap();
        assert_eq!(traj.status, RunStatus::Completed);
        // if the scale were re-applied every step the loop would degrade fast;
        // a single application keeps the error small
        assert!(traj.max_abs_err_after(0.11) < 1.0);
    }

    #[test]
    fn divergence_latches_and_stops_recording() {
        // destabilize by flipping the controller into a strong saddle
        let (plant, mut controller) = baseline();
        controller.params = ControllerParams { gamma1: 0.5, gamma2: -45.0, k: 115.0 };
        let traj = simulate(
            PlantState::rest(0.0),
            plant,
            &controller,
            &SigmaBinding::default(),
            &[],
            &SimOptions::default(),
        )
        .unwrap();
        match traj.status {
            RunStatus::Diverged { at_time } => {
                let last = traj.samples.last().unwrap();
                assert!(last.t < at_time);
                assert!(last.x.abs() <= 100.0);
            }
            RunStatus::Completed => panic!("expected divergence"),
        }
    }

    #[test]
    fn set_plant_params_patch_creates_model_mismatch() {
        // the patched field alone changes; the controller keeps its model,
        // so the trajectory departs from the event-free run
        let mut p = PlantParams::default();
        PlantPatch { delta: Some(9.0), ..Default::default() }.apply(&mut p);
        assert_eq!(p.delta, 9.0);
        assert_eq!(p.eps1, PlantParams::default().eps1);

        let (plant, controller) = baseline();
        let binding = SigmaBinding::default();
        let opts = SimOptions { t_end: 0.4, ..Default::default() };
        let plain = simulate(PlantState::rest(0.0), plant, &controller, &binding, &[], &opts).unwrap();
        let events = [ScenarioEvent {
            at_time: 0.2,
            action: EventAction::SetPlantParams {
                patch: PlantPatch { delta: Some(60.0), ..Default::default() },
            },
        }];
        let patched =
            simulate(PlantState::rest(0.0), plant, &controller, &binding, &events, &opts).unwrap();
        assert_ne!(plain.samples.last().unwrap().x, patched.samples.last().unwrap().x);
        // the overwrite is damping-like interference: bounded, not divergent
        assert_eq!(patched.status, RunStatus::Completed);
    }

    #[test]
    fn simulate_is_deterministic() {
        let (plant, controller) = baseline();
        let binding = SigmaBinding::default();
        let opts = SimOptions { t_end: 0.5, ..Default::default() };
        let events = [ScenarioEvent {
            at_time: 0.2,
            action: EventAction::AdditiveDisturbance { amplitude: 1.0, freq: 30.0, duration: 0.1 },
        }];
        let a = simulate(PlantState::rest(0.0), plant, &controller, &binding, &events, &opts).unwrap();
        let b = simulate(PlantState::rest(0.0), plant, &controller, &binding, &events, &opts).unwrap();
        assert_eq!(a, b);
    }
}
