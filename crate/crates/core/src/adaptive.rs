//! Online monitoring, sigma proposal, and windowed retraining.
//!
//! The loop watches the closed-loop tracking error. When `|e|` crosses the
//! trigger threshold it samples candidate sigma pairs, asks the surrogate to
//! predict the resulting system error at the current state, and applies the
//! first candidate predicted to improve on the measured error. Every
//! `window` steps the mean error over the window is compared against the
//! previous baseline; if it regressed, the net is retrained on the rehearsal
//! memory plus the fresh window data, and the memory absorbs a fraction of
//! that new data so earlier regimes stay represented.
//!
//! Which physical quantities the two sigmas denote is a runtime binding:
//! each sigma names a controller or plant parameter. Proposal-driven updates
//! are deliberate re-tunes, so plant-bound targets update the controller's
//! model along with the physical plant; scripted interference events go
//! through the raw path instead and leave the model stale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{ClfController, ControllerParams};
use crate::dynamics::{
    PlantParams, PlantState, RunStatus, ScenarioEvent, SimOptions, Trajectory, TrajectorySample,
};
use crate::error::{Error, Result};
use crate::harness::{split_dataset, Dataset, SampleRecord};
use crate::surrogate::{RegressionNet, TrainOptions};

/// A candidate or active pair of tunable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPair {
    pub s1: f64,
    pub s2: f64,
}

/// A controller or plant parameter addressable by a sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTarget {
    Gamma1,
    Gamma2,
    K,
    Delta,
    Eps1,
    Eps2,
    ForcingAmp,
    ForcingFreq,
    LinStiffness,
}

impl ParamTarget {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "gamma1" => Self::Gamma1,
            "gamma2" => Self::Gamma2,
            "k" => Self::K,
            "delta" => Self::Delta,
            "eps1" => Self::Eps1,
            "eps2" => Self::Eps2,
            "forcing_amp" => Self::ForcingAmp,
            "forcing_freq" => Self::ForcingFreq,
            "lin_stiffness" => Self::LinStiffness,
            other => return Err(Error::UnknownTarget(other.to_string())),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gamma1 => "gamma1",
            Self::Gamma2 => "gamma2",
            Self::K => "k",
            Self::Delta => "delta",
            Self::Eps1 => "eps1",
            Self::Eps2 => "eps2",
            Self::ForcingAmp => "forcing_amp",
            Self::ForcingFreq => "forcing_freq",
            Self::LinStiffness => "lin_stiffness",
        }
    }

    pub fn is_controller(&self) -> bool {
        matches!(self, Self::Gamma1 | Self::Gamma2 | Self::K)
    }

    fn read(&self, cp: &ControllerParams, plant: &PlantParams) -> f64 {
        match self {
            Self::Gamma1 => cp.gamma1,
            Self::Gamma2 => cp.gamma2,
            Self::K => cp.k,
            Self::Delta => plant.delta,
            Self::Eps1 => plant.eps1,
            Self::Eps2 => plant.eps2,
            Self::ForcingAmp => plant.forcing_amp,
            Self::ForcingFreq => plant.forcing_freq,
            Self::LinStiffness => plant.lin_stiffness,
        }
    }

    fn write(&self, value: f64, cp: &mut ControllerParams, plant: &mut PlantParams) {
        match self {
            Self::Gamma1 => cp.gamma1 = value,
            Self::Gamma2 => cp.gamma2 = value,
            Self::K => cp.k = value,
            Self::Delta => plant.delta = value,
            Self::Eps1 => plant.eps1 = value,
            Self::Eps2 => plant.eps2 = value,
            Self::ForcingAmp => plant.forcing_amp = value,
            Self::ForcingFreq => plant.forcing_freq = value,
            Self::LinStiffness => plant.lin_stiffness = value,
        }
    }
}

/// Names of the two parameters the sigmas overwrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaBinding {
    pub target1: ParamTarget,
    pub target2: ParamTarget,
}

impl Default for SigmaBinding {
    fn default() -> Self {
        Self { target1: ParamTarget::Gamma1, target2: ParamTarget::Gamma2 }
    }
}

impl SigmaBinding {
    pub fn new(target1: ParamTarget, target2: ParamTarget) -> Result<Self> {
        if target1 == target2 {
            return Err(Error::Config(format!(
                "sigma binding targets must be distinct, got {} twice",
                target1.as_str()
            )));
        }
        Ok(Self { target1, target2 })
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "binding must be `target1,target2`, got `{spec}`"
            )));
        };
        Self::new(ParamTarget::parse(a.trim())?, ParamTarget::parse(b.trim())?)
    }

    /// Current values of the bound parameters.
    pub fn current(&self, cp: &ControllerParams, plant: &PlantParams) -> SigmaPair {
        SigmaPair {
            s1: self.target1.read(cp, plant),
            s2: self.target2.read(cp, plant),
        }
    }

    /// Raw overwrite used by scripted interference: plant-bound targets touch
    /// the physical plant only, so the controller model goes stale.
    pub fn apply_raw(&self, pair: SigmaPair, cp: &mut ControllerParams, plant: &mut PlantParams) {
        self.target1.write(pair.s1, cp, plant);
        self.target2.write(pair.s2, cp, plant);
    }
}

/// Deliberate re-tune through the binding: plant-bound targets update the
/// controller's inverse-dynamics model together with the plant, controller
/// targets rewrite the gains. Everything else is untouched.
pub fn apply_sigmas(
    pair: SigmaPair,
    binding: &SigmaBinding,
    cp: &mut ControllerParams,
    plant: &mut PlantParams,
    model: Option<&mut PlantParams>,
) {
    binding.apply_raw(pair, cp, plant);
    if let Some(model) = model {
        for target in [binding.target1, binding.target2] {
            if !target.is_controller() {
                let value = target.read(cp, plant);
                target.write(value, cp, model);
            }
        }
    }
}

/// How `s2` relates to the sampled `s1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// `s2 = ratio * s1`.
    Ratio(f64),
    /// `s2` drawn independently from the same interval.
    Uncoupled,
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Ratio(-0.125)
    }
}

impl Coupling {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "uncoupled" {
            return Ok(Coupling::Uncoupled);
        }
        s.parse::<f64>()
            .map(Coupling::Ratio)
            .map_err(|_| Error::Config(format!("coupling must be a ratio or `uncoupled`, got `{s}`")))
    }
}

impl Serialize for Coupling {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coupling::Ratio(r) => serializer.serialize_f64(*r),
            Coupling::Uncoupled => serializer.serialize_str("uncoupled"),
        }
    }
}

impl<'de> Deserialize<'de> for Coupling {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Coupling::Ratio)
                .ok_or_else(|| D::Error::custom("coupling ratio must be a float")),
            serde_json::Value::String(s) if s == "uncoupled" => Ok(Coupling::Uncoupled),
            other => Err(D::Error::custom(format!(
                "coupling must be a number or \"uncoupled\", got {other}"
            ))),
        }
    }
}

/// What drives the proposal trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    /// Instantaneous `|e|` above the threshold.
    #[default]
    Level,
    /// Estimated d|e|/dt over the trailing ten steps above the threshold
    /// (per second). Experimental alternative; off by default.
    Slope,
}

/// Monitor and retraining configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub err_threshold: f64,
    /// Steps per probe period.
    pub window: usize,
    /// Sampler cap per trigger.
    pub max_attempts: usize,
    /// Share of each window absorbed into the rehearsal memory on retrain.
    pub memory_fraction: f64,
    pub seed: u64,
    pub binding: SigmaBinding,
    pub coupling: Coupling,
    pub include_u: bool,
    pub trigger_mode: TriggerMode,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            err_threshold: 0.8,
            window: 100,
            max_attempts: 200,
            memory_fraction: 0.10,
            seed: 0,
            binding: SigmaBinding::default(),
            coupling: Coupling::default(),
            include_u: false,
            trigger_mode: TriggerMode::Level,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.err_threshold > 0.0) {
            return Err(Error::Config("err_threshold must be > 0".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if !(self.memory_fraction > 0.0 && self.memory_fraction < 1.0) {
            return Err(Error::Config("memory_fraction must be in (0, 1)".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Rehearsal memory plus the running probe-window accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBuffer {
    /// Retained records from earlier regimes.
    pub memo: Vec<SampleRecord>,
    /// Records since the last probe.
    pub new_data: Vec<SampleRecord>,
    /// Baseline window-average error against which probes compare.
    pub prev_sys_avg: f64,
    err_accum: f64,
    accum_count: usize,
}

impl MemoryBuffer {
    /// Seed the memory with a uniform sample of the training split and set
    /// the baseline to the mean training error.
    pub fn from_dataset(ds: &Dataset, fraction: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let train: Vec<SampleRecord> = ds.train_records().copied().collect();
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let take = (fraction * train.len() as f64).ceil() as usize;
        let memo = sample_without_replacement(&train, take.min(train.len()), rng);
        let prev_sys_avg = train.iter().map(|r| r.err.abs()).sum::<f64>() / train.len() as f64;
        Ok(Self { memo, new_data: Vec::new(), prev_sys_avg, err_accum: 0.0, accum_count: 0 })
    }

    pub fn push(&mut self, record: SampleRecord) {
        self.err_accum += record.err.abs();
        self.accum_count += 1;
        self.new_data.push(record);
    }

    pub fn window_average(&self) -> f64 {
        if self.accum_count == 0 {
            0.0
        } else {
            self.err_accum / self.accum_count as f64
        }
    }

    /// Reset the per-window accumulator and the since-last-probe records.
    pub fn reset_window(&mut self) {
        self.new_data.clear();
        self.err_accum = 0.0;
        self.accum_count = 0;
    }
}

fn sample_without_replacement(
    pool: &[SampleRecord],
    take: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<SampleRecord> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    // partial Fisher-Yates: the first `take` positions are a uniform sample
    for i in 0..take.min(pool.len()) {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    idx[..take.min(pool.len())].iter().map(|&i| pool[i]).collect()
}

/// Probe decision over the last window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetrainDecision {
    Retrain { window_avg: f64 },
    NoRetrain { window_avg: f64 },
}

/// Retrain iff the window-average error strictly exceeds the baseline.
pub fn window_probe(buf: &MemoryBuffer, _cfg: &AdaptiveConfig) -> RetrainDecision {
    let window_avg = buf.window_average();
    if window_avg > buf.prev_sys_avg {
        RetrainDecision::Retrain { window_avg }
    } else {
        RetrainDecision::NoRetrain { window_avg }
    }
}

/// Anything that can screen a candidate sigma pair at a state.
pub trait Predictor {
    fn predict_err(&self, t: f64, x: f64, v: f64, s1: f64, s2: f64, u: Option<f64>) -> Result<f64>;
}

impl Predictor for RegressionNet {
    fn predict_err(&self, t: f64, x: f64, v: f64, s1: f64, s2: f64, u: Option<f64>) -> Result<f64> {
        self.predict_error(t, x, v, s1, s2, u)
    }
}

/// Outcome of a proposal search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// First candidate predicted to beat the measured error.
    Accepted { pair: SigmaPair, predicted: f64, attempts: usize },
    /// Sampler cap reached; carries the best-predicted candidate seen.
    NoImprovement { best: SigmaPair, best_predicted: f64, attempts: usize },
}

/// Sample candidate pairs until one is predicted to improve on the measured
/// error, up to `cfg.max_attempts`.
pub fn propose_sigmas<P: Predictor>(
    net: &P,
    state: &PlantState,
    u_now: Option<f64>,
    current_err: f64,
    cfg: &AdaptiveConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Proposal> {
    let mut best: Option<(SigmaPair, f64)> = None;
    for attempt in 1..=cfg.max_attempts {
        let pair = crate::harness::draw_sigma_pair(rng, cfg.coupling);
        let predicted = net.predict_err(state.t, state.x, state.v, pair.s1, pair.s2, u_now)?;
        if best.is_none_or(|(_, b)| predicted < b) {
            best = Some((pair, predicted));
        }
        if predicted < current_err {
            return Ok(Proposal::Accepted { pair, predicted, attempts: attempt });
        }
    }
    let (best, best_predicted) = best.expect("max_attempts >= 1");
    Ok(Proposal::NoImprovement { best, best_predicted, attempts: cfg.max_attempts })
}

/// Kinds of entries in the adaptive event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SigmaUpdate,
    NoImprovement,
    Retrain,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::SigmaUpdate => "sigma_update",
            EventKind::NoImprovement => "no_improvement",
            EventKind::Retrain => "retrain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigma_update" => Some(EventKind::SigmaUpdate),
            "no_improvement" => Some(EventKind::NoImprovement),
            "retrain" => Some(EventKind::Retrain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: f64,
    pub kind: EventKind,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub predicted_err: Option<f64>,
    /// Measured |e| at the trigger step (window average for retrain rows).
    pub measured_err: f64,
    pub attempts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn sigma_updates(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.kind == EventKind::SigmaUpdate)
    }
}

/// One retraining event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrainRecord {
    pub t: f64,
    pub memo_size: usize,
    pub new_data_size: usize,
    /// Held-out RMSE on the retrain set's test split.
    pub post_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrainLog {
    pub records: Vec<RetrainRecord>,
}

pub fn retrainlog_to_csv(log: &RetrainLog) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(crate::harness::RETRAINLOG_HEADER);
    out.push('\n');
    for r in &log.records {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.memo_size, r.new_data_size, r.post_rmse);
    }
    out
}

/// Retrain the net on `memo + new_data` (split 60/40 for the held-out RMSE),
/// then grow the memory by `ceil(memory_fraction * |new_data|)` uniformly
/// sampled rows and clear the window.
///
/// The optimizer state and learning-rate schedule restart; weights continue
/// from their current values and the input standardization stays frozen.
pub fn retrain(
    net: &mut RegressionNet,
    buf: &mut MemoryBuffer,
    cfg: &AdaptiveConfig,
    train_opts: &TrainOptions,
    rng: &mut ChaCha8Rng,
) -> Result<RetrainRecord> {
    if buf.memo.is_empty() && buf.new_data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let records: Vec<SampleRecord> = buf.memo.iter().chain(buf.new_data.iter()).copied().collect();
    let split_seed = rng.random::<u64>();
    let ds = split_dataset(Dataset::from_records(records), 0.6, split_seed)?;
    net.reset_optimizer();
    let opts = TrainOptions { restandardize: false, ..*train_opts };
    let log = net.train(&ds, &opts)?;
    let post_rmse = log.epochs.last().map_or(f64::NAN, |r| r.test_rmse);

    let take = (cfg.memory_fraction * buf.new_data.len() as f64).ceil() as usize;
    let absorbed = sample_without_replacement(&buf.new_data, take.min(buf.new_data.len()), rng);
    buf.memo.extend(absorbed);
    let new_data_size = buf.new_data.len();
    buf.reset_window();
    Ok(RetrainRecord { t: 0.0, memo_size: buf.memo.len(), new_data_size, post_rmse })
}

/// Everything produced by one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub trajectory: Trajectory,
    pub event_log: EventLog,
    pub retrain_log: RetrainLog,
}

/// Closed-loop run with the monitor, proposal gate, and windowed retraining.
///
/// Per control step: scripted events fire, the step is recorded, and the
/// plant advances under the held input. The proposal gate runs on the
/// recorded step's error; an accepted pair takes effect from the next
/// control period. Every `window` steps the probe may retrain the net
/// (synchronously; simulation time does not advance during retraining).
#[allow(clippy::too_many_arguments)]
pub fn run_adaptive(
    initial: PlantState,
    plant: PlantParams,
    controller: &ClfController,
    net: &mut RegressionNet,
    buf: &mut MemoryBuffer,
    cfg: &AdaptiveConfig,
    events: &[ScenarioEvent],
    opts: &SimOptions,
    train_opts: &TrainOptions,
) -> Result<AdaptiveRun> {
    cfg.validate()?;
    assert!(opts.dt > 0.0, "dt must be positive");
    assert!(opts.t_end > initial.t, "t_end must exceed the initial time");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut looped = crate::dynamics::LoopState::new(initial, plant, controller.clone(), events);
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut event_log = EventLog::default();
    let mut retrain_log = RetrainLog::default();
    let mut recent_err: Vec<f64> = Vec::new();

    let t0 = initial.t;
    let n_steps = ((opts.t_end - t0) / opts.dt).round() as usize;
    let mut status = RunStatus::Completed;

    for i in 0..n_steps {
        looped.apply_due_events(&cfg.binding, opts.dt);

        let step_status = looped.record_and_step(&cfg.binding, opts, i, t0, &mut samples)?;
        let recorded = *samples.last().expect("record_and_step pushed a sample");
        buf.push(SampleRecord {
            t: recorded.t,
            x: recorded.x,
            v: recorded.v,
            u: recorded.u,
            s1: recorded.s1,
            s2: recorded.s2,
            err: recorded.e.abs().min(opts.divergence_bound),
        });
        recent_err.push(recorded.e.abs());
        if recent_err.len() > 10 {
            recent_err.remove(0);
        }

        let triggered = match cfg.trigger_mode {
            TriggerMode::Level => recorded.e.abs() > cfg.err_threshold,
            TriggerMode::Slope => {
                recent_err.len() >= 2 && {
                    let span = (recent_err.len() - 1) as f64 * opts.dt;
                    (recent_err.last().unwrap() - recent_err.first().unwrap()) / span
                        > cfg.err_threshold
                }
            }
        };
        if triggered {
            let state = PlantState { t: recorded.t, x: recorded.x, v: recorded.v };
            let u_now = cfg.include_u.then_some(recorded.u);
            let current_err = recorded.e.abs();
            match propose_sigmas(net, &state, u_now, current_err, cfg, &mut rng)? {
                Proposal::Accepted { pair, predicted, attempts } => {
                    cfg.binding.apply_raw(pair, &mut looped.controller.params, &mut looped.plant);
                    // deliberate re-tune: the model tracks plant-bound targets
                    for target in [cfg.binding.target1, cfg.binding.target2] {
                        if !target.is_controller() {
                            let value = target.read(&looped.controller.params, &looped.plant);
                            let mut unused = looped.controller.params;
                            target.write(value, &mut unused, &mut looped.controller.model);
                        }
                    }
                    event_log.entries.push(LogEntry {
                        t: recorded.t,
                        kind: EventKind::SigmaUpdate,
                        s1: Some(pair.s1),
                        s2: Some(pair.s2),
                        predicted_err: Some(predicted),
                        measured_err: current_err,
                        attempts: Some(attempts),
                    });
                }
                Proposal::NoImprovement { best, best_predicted, attempts } => {
                    event_log.entries.push(LogEntry {
                        t: recorded.t,
                        kind: EventKind::NoImprovement,
                        s1: Some(best.s1),
                        s2: Some(best.s2),
                        predicted_err: Some(best_predicted),
                        measured_err: current_err,
                        attempts: Some(attempts),
                    });
                }
            }
        }

        if let Some(diverged) = step_status {
            status = diverged;
            break;
        }

        if (i + 1) % cfg.window == 0 {
            match window_probe(buf, cfg) {
                RetrainDecision::Retrain { window_avg } => {
                    let mut record = retrain(net, buf, cfg, train_opts, &mut rng)?;
                    record.t = looped.state.t;
                    retrain_log.records.push(record);
                    buf.prev_sys_avg = window_avg;
                    event_log.entries.push(LogEntry {
                        t: looped.state.t,
                        kind: EventKind::Retrain,
                        s1: None,
                        s2: None,
                        predicted_err: None,
                        measured_err: window_avg,
                        attempts: None,
                    });
                }
                RetrainDecision::NoRetrain { .. } => buf.reset_window(),
            }
        }
    }

    Ok(AdaptiveRun {
        trajectory: Trajectory { samples, status },
        event_log,
        retrain_log,
    })
}
