//! Closed-loop simulation and self-tuning for a forced Duffing-Van der Pol
//! oscillator.
//!
//! The crate wires together five pieces:
//!
//! - [`dynamics`]: the nonlinear plant, a fixed-step RK4 integrator at the
//!   1 kHz control rate, and scripted interference events (parameter
//!   overwrites, actuator faults, disturbances).
//! - [`controller`]: a harmonic reference with analytic derivatives and a
//!   control-Lyapunov-function tracking controller that enforces
//!   `V_dot = -k V` by exact inverse dynamics.
//! - [`surrogate`]: a five-block dense regression network (batch norm, ReLU,
//!   terminal dropout, Adam) predicting the system error from
//!   `(t, x, v, s1, s2)`.
//! - [`adaptive`]: the runtime monitor that proposes new sigma pairs through
//!   the surrogate when tracking error crosses a threshold, and retrains the
//!   net on windowed data plus a self-refreshing rehearsal memory.
//! - [`harness`]/[`config`]/[`plot`]: dataset collection and splitting, run
//!   metrics, CSV/JSON formats, and deterministic SVG plots.
//!
//! Every random choice flows from explicit seeds through ChaCha streams, so
//! complete runs (simulation, training, adaptation) are bit-reproducible.

pub mod adaptive;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod plot;
pub mod surrogate;

pub use adaptive::{
    apply_sigmas, propose_sigmas, retrain, run_adaptive, window_probe, AdaptiveConfig,
    AdaptiveRun, Coupling, EventLog, MemoryBuffer, ParamTarget, Proposal, RetrainDecision,
    SigmaBinding, SigmaPair,
};
pub use config::{RunConfig, Scenario};
pub use controller::{
    clf_value, control_law, tracking_error, ClfController, ControllerParams, RefEval,
    ReferenceSignal,
};
pub use dynamics::{
    plant_accel, rk4_step, simulate, EventAction, PlantParams, PlantState, RunStatus,
    ScenarioEvent, SimOptions, StepOutcome, Trajectory,
};
pub use error::{Error, Result};
pub use harness::{
    collect_dataset, compute_metrics, prediction_rmse, split_dataset, CollectOptions, Dataset,
    RunMetrics, SampleRecord,
};
pub use surrogate::{loss_mse, Mode, NetConfig, RegressionNet, TrainLog, TrainOptions};
