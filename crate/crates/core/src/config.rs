//! Run configuration and scenario files (JSON).
//!
//! One document with `plant`, `controller`, `reference`, `adaptive`, and
//! `collection` sections. Every field has a default matching the baseline
//! tuning, and unknown keys are rejected so typos fail loudly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveConfig, Coupling, SigmaBinding, TriggerMode};
use crate::controller::{ClfController, ControllerParams, ReferenceSignal};
use crate::dynamics::{PlantParams, PlantState, ScenarioEvent, SimOptions};
use crate::error::{Error, Result};
use crate::harness::CollectOptions;

fn default_divergence_bound() -> f64 {
    100.0
}

/// Plant coefficients plus run-level state bounds and initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub forcing_amp: f64,
    pub forcing_freq: f64,
    pub lin_stiffness: f64,
    pub divergence_bound: f64,
    pub x0: f64,
    pub v0: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantParams::default();
        Self {
            delta: p.delta,
            eps1: p.eps1,
            eps2: p.eps2,
            forcing_amp: p.forcing_amp,
            forcing_freq: p.forcing_freq,
            lin_stiffness: p.lin_stiffness,
            divergence_bound: default_divergence_bound(),
            x0: 0.0,
            v0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub gamma1: f64,
    pub gamma2: f64,
    pub k: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerParams::default();
        Self { gamma1: c.gamma1, gamma2: c.gamma2, k: c.k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    pub base_freq: f64,
    /// `[index, amplitude]` pairs.
    pub harmonics: Vec<(u32, f64)>,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        let r = ReferenceSignal::default();
        Self { base_freq: r.base_freq, harmonics: r.harmonics }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSection {
    pub err_threshold: f64,
    pub window: usize,
    pub max_attempts: usize,
    pub memory_fraction: f64,
    /// `[target1, target2]` parameter names.
    pub binding: (String, String),
    pub coupling: Coupling,
    pub include_u: bool,
    pub trigger_mode: TriggerMode,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        let a = AdaptiveConfig::default();
        Self {
            err_threshold: a.err_threshold,
            window: a.window,
            max_attempts: a.max_attempts,
            memory_fraction: a.memory_fraction,
            binding: ("gamma1".into(), "gamma2".into()),
            coupling: a.coupling,
            include_u: a.include_u,
            trigger_mode: a.trigger_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectionSection {
    pub n_episodes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Sigma distribution for episode draws.
    pub coupling: Coupling,
}

impl Default for CollectionSection {
    fn default() -> Self {
        Self { n_episodes: 50, dt: 1e-3, t_end: 2.5, coupling: Coupling::default() }
    }
}

/// Parsed union of all sections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    pub controller: ControllerSection,
    pub reference: ReferenceSection,
    pub adaptive: AdaptiveSection,
    pub collection: CollectionSection,
    pub seed: u64,
}

impl RunConfig {
    pub fn plant_params(&self) -> PlantParams {
        PlantParams {
            delta: self.plant.delta,
            eps1: self.plant.eps1,
            eps2: self.plant.eps2,
            forcing_amp: self.plant.forcing_amp,
            forcing_freq: self.plant.forcing_freq,
            lin_stiffness: self.plant.lin_stiffness,
        }
    }

    pub fn controller_params(&self) -> ControllerParams {
        ControllerParams {
            gamma1: self.controller.gamma1,
            gamma2: self.controller.gamma2,
            k: self.controller.k,
        }
    }

    pub fn reference_signal(&self) -> ReferenceSignal {
        ReferenceSignal {
            harmonics: self.reference.harmonics.clone(),
            base_freq: self.reference.base_freq,
        }
    }

    pub fn clf_controller(&self) -> ClfController {
        ClfController::new(
            self.controller_params(),
            self.reference_signal(),
            self.plant_params(),
        )
    }

    pub fn initial_state(&self) -> PlantState {
        PlantState { t: 0.0, x: self.plant.x0, v: self.plant.v0 }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            dt: self.collection.dt,
            t_end: self.collection.t_end,
            divergence_bound: self.plant.divergence_bound,
        }
    }

    pub fn binding(&self) -> Result<SigmaBinding> {
        SigmaBinding::parse(&format!("{},{}", self.adaptive.binding.0, self.adaptive.binding.1))
    }

    pub fn adaptive_config(&self) -> Result<AdaptiveConfig> {
        let cfg = AdaptiveConfig {
            err_threshold: self.adaptive.err_threshold,
            window: self.adaptive.window,
            max_attempts: self.adaptive.max_attempts,
            memory_fraction: self.adaptive.memory_fraction,
            seed: self.seed,
            binding: self.binding()?,
            coupling: self.adaptive.coupling,
            include_u: self.adaptive.include_u,
            trigger_mode: self.adaptive.trigger_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn collect_options(&self) -> CollectOptions {
        CollectOptions {
            n_episodes: self.collection.n_episodes,
            dt: self.collection.dt,
            t_end: self.collection.t_end,
            divergence_bound: self.plant.divergence_bound,
            coupling: self.collection.coupling,
            seed: self.seed,
        }
    }

    /// Full validation of every section.
    pub fn validate(&self) -> Result<()> {
        self.plant_params().validate()?;
        self.controller_params().validate()?;
        self.reference_signal().validate()?;
        self.adaptive_config()?;
        if self.collection.n_episodes == 0 {
            return Err(Error::Config("collection.n_episodes must be >= 1".into()));
        }
        if !(self.collection.dt > 0.0) || !(self.collection.t_end > 0.0) {
            return Err(Error::Config("collection.dt and t_end must be positive".into()));
        }
        if !(self.plant.divergence_bound > 0.0) {
            return Err(Error::Config("plant.divergence_bound must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::harness::read_file(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Scenario file: a list of timed events.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        for ev in &sc.events {
            if !(ev.at_time >= 0.0) {
                return Err(Error::Config(format!(
                    "event at_time must be >= 0, got {}",
                    ev.at_time
                )));
            }
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::harness::read_file(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }
}
