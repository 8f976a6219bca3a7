//! Dataset collection, train/test splitting, run metrics, and CSV I/O.
//!
//! All CSV exports use the shortest round-trip decimal representation of
//! every float (Rust's default `Display` for `f64`), so
//! `import(export(x)) == x` bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{apply_sigmas, Coupling, EventKind, EventLog, LogEntry, SigmaBinding, SigmaPair};
use crate::controller::ClfController;
use crate::dynamics::{simulate, PlantParams, PlantState, RunStatus, SimOptions, Trajectory, TrajectorySample};
use crate::error::{Error, Result};
use crate::surrogate::{EpochRow, TrainLog};

/// One logged control step: the regression net's training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    /// Control signal applied at this step.
    pub u: f64,
    /// Active sigma pair (values of the two bound parameters).
    pub s1: f64,
    pub s2: f64,
    /// `|qd - x|` at this step, capped at the divergence bound.
    pub err: f64,
}

/// Records plus a train/test index split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<SampleRecord>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl Dataset {
    pub fn from_records(records: Vec<SampleRecord>) -> Self {
        Self { records, train_idx: Vec::new(), test_idx: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn train_records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.train_idx.iter().map(|&i| &self.records[i])
    }

    pub fn test_records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.test_idx.iter().map(|&i| &self.records[i])
    }
}

/// How episode sigma pairs are drawn during collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectOptions {
    pub n_episodes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub divergence_bound: f64,
    pub coupling: Coupling,
    pub seed: u64,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            n_episodes: 50,
            dt: 1e-3,
            t_end: 2.5,
            divergence_bound: 100.0,
            coupling: Coupling::default(),
            seed: 0,
        }
    }
}

/// Draw one sigma pair: `s1 ~ U[-50, 50]` with `s2` coupled or independent.
pub fn draw_sigma_pair<R: Rng>(rng: &mut R, coupling: Coupling) -> SigmaPair {
    let mut s1 = rng.random_range(-50.0..=50.0);
    while s1 == 0.0 {
        s1 = rng.random_range(-50.0..=50.0);
    }
    let s2 = match coupling {
        Coupling::Ratio(r) => r * s1,
        Coupling::Uncoupled => rng.random_range(-50.0..=50.0),
    };
    SigmaPair { s1, s2 }
}

/// Run seeded episodes, each with one sigma pair applied at t = 0 through the
/// binding (an intentional re-tune: the controller model tracks plant-bound
/// targets). Diverged episodes contribute their records up to the divergence
/// point with `err` capped at the divergence bound.
pub fn collect_dataset(
    plant: &PlantParams,
    controller: &ClfController,
    binding: &SigmaBinding,
    opts: &CollectOptions,
) -> Result<Dataset> {
    assert!(opts.n_episodes >= 1, "n_episodes must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sim_opts = SimOptions {
        dt: opts.dt,
        t_end: opts.t_end,
        divergence_bound: opts.divergence_bound,
    };
    let mut records = Vec::new();
    for _ in 0..opts.n_episodes {
        let pair = draw_sigma_pair(&mut rng, opts.coupling);
        let mut ctrl = controller.clone();
        let mut plant_ep = *plant;
        apply_sigmas(pair, binding, &mut ctrl.params, &mut plant_ep, Some(&mut ctrl.model));
        let traj = simulate(
            PlantState::rest(0.0),
            plant_ep,
            &ctrl,
            binding,
            &[],
            &sim_opts,
        )?;
        records.extend(traj.to_records(opts.divergence_bound));
    }
    Ok(Dataset::from_records(records))
}

/// Uniformly shuffled split with exactly `round(ratio * N)` training rows.
pub fn split_dataset(mut ds: Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    let n = ds.records.len();
    if n < 2 {
        return Err(Error::TooSmall { need: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_train = (ratio * n as f64).round() as usize;
    ds.train_idx = idx[..n_train].to_vec();
    ds.test_idx = idx[n_train..].to_vec();
    Ok(ds)
}

/// Summary statistics of a run or of a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Root mean square of the error column (or of prediction residuals).
    pub rmse: f64,
    /// Largest `|err|` after the transient cutoff.
    pub max_err_after_transient: f64,
    pub transient: f64,
    /// Mean `|err|` per window of `window` steps.
    pub window_averages: Vec<f64>,
    pub window: usize,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub n_samples: usize,
}

/// Metrics over a trajectory.
pub fn compute_metrics(traj: &Trajectory, transient: f64, window: usize) -> Result<RunMetrics> {
    if traj.samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sq_sum: f64 = traj.samples.iter().map(|s| s.e * s.e).sum();
    let rmse = (sq_sum / traj.samples.len() as f64).sqrt();
    let window_averages = traj
        .samples
        .chunks(window.max(1))
        .map(|c| c.iter().map(|s| s.e.abs()).sum::<f64>() / c.len() as f64)
        .collect();
    let (diverged, divergence_time) = match traj.status {
        RunStatus::Diverged { at_time } => (true, Some(at_time)),
        RunStatus::Completed => (false, None),
    };
    Ok(RunMetrics {
        rmse,
        max_err_after_transient: traj.max_abs_err_after(transient),
        transient,
        window_averages,
        window,
        diverged,
        divergence_time,
        n_samples: traj.samples.len(),
    })
}

/// RMSE of predictions against targets, checked against length mismatch.
pub fn prediction_rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    let sq: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok((sq / predictions.len() as f64).sqrt())
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub const DATASET_HEADER: &str = "t,x,v,u,s1,s2,err";
pub const TRAJECTORY_HEADER: &str = "t,x,v,u,qd,e,V,s1,s2,status";
pub const EVENTLOG_HEADER: &str = "t,kind,s1,s2,predicted_err,measured_err,attempts";
pub const RETRAINLOG_HEADER: &str = "t,memo_size,new_data_size,post_rmse";
pub const TRAINLOG_HEADER: &str = "epoch,lr,batch_size,train_rmse,test_rmse";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = String::with_capacity(32 * (ds.records.len() + 1));
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for r in &ds.records {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.t, r.x, r.v, r.u, r.s1, r.s2, r.err);
    }
    out
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let status = traj.status.as_str();
    let mut out = String::with_capacity(48 * (traj.samples.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.t, s.x, s.v, s.u, s.qd, s.e, s.clf, s.s1, s.s2, status
        );
    }
    out
}

pub fn eventlog_to_csv(log: &EventLog) -> String {
    let mut out = String::new();
    out.push_str(EVENTLOG_HEADER);
    out.push('\n');
    for e in &log.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.t,
            e.kind.as_str(),
            fmt_opt(e.s1),
            fmt_opt(e.s2),
            fmt_opt(e.predicted_err),
            e.measured_err,
            e.attempts.map(|a| a.to_string()).unwrap_or_default(),
        );
    }
    out
}

pub fn trainlog_to_csv(log: &TrainLog) -> String {
    let mut out = String::new();
    out.push_str(TRAINLOG_HEADER);
    out.push('\n');
    for row in &log.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.epoch, row.lr, log.batch_size, row.train_rmse, row.test_rmse
        );
    }
    out
}

struct LineParser<'a> {
    path: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_string(), line: self.line, msg: msg.into() }
    }

    fn f64(&self, field: &str) -> Result<f64> {
        field
            .parse::<f64>()
            .map_err(|_| self.err(format!("invalid float `{field}`")))
    }

    fn opt_f64(&self, field: &str) -> Result<Option<f64>> {
        if field.is_empty() {
            Ok(None)
        } else {
            self.f64(field).map(Some)
        }
    }

    fn fields(&self, line: &'a str, expected: usize) -> Result<Vec<&'a str>> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(self.err(format!("expected {expected} fields, got {}", fields.len())));
        }
        Ok(fields)
    }
}

fn check_header(first: Option<&str>, want: &str, path: &str) -> Result<()> {
    match first {
        Some(h) if h == want => Ok(()),
        Some(h) => Err(Error::Parse {
            path: path.to_string(),
            line: 1,
            msg: format!("expected header `{want}`, got `{h}`"),
        }),
        None => Err(Error::Parse { path: path.to_string(), line: 1, msg: "empty file".into() }),
    }
}

pub fn dataset_from_csv(text: &str, path: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    check_header(lines.next(), DATASET_HEADER, path)?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let p = LineParser { path, line: i + 2 };
        let f = p.fields(line, 7)?;
        records.push(SampleRecord {
            t: p.f64(f[0])?,
            x: p.f64(f[1])?,
            v: p.f64(f[2])?,
            u: p.f64(f[3])?,
            s1: p.f64(f[4])?,
            s2: p.f64(f[5])?,
            err: p.f64(f[6])?,
        });
    }
    Ok(Dataset::from_records(records))
}

pub fn trajectory_from_csv(text: &str, path: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    check_header(lines.next(), TRAJECTORY_HEADER, path)?;
    let mut samples = Vec::new();
    let mut status = RunStatus::Completed;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let p = LineParser { path, line: i + 2 };
        let f = p.fields(line, 10)?;
        samples.push(TrajectorySample {
            t: p.f64(f[0])?,
            x: p.f64(f[1])?,
            v: p.f64(f[2])?,
            u: p.f64(f[3])?,
            qd: p.f64(f[4])?,
            e: p.f64(f[5])?,
            clf: p.f64(f[6])?,
            s1: p.f64(f[7])?,
            s2: p.f64(f[8])?,
        });
        status = match f[9] {
            "completed" => RunStatus::Completed,
            // the CSV stores only the flag; approximate the divergence time
            // by the last recorded step
            "diverged" => RunStatus::Diverged { at_time: samples.last().unwrap().t },
            other => return Err(p.err(format!("unknown status `{other}`"))),
        };
    }
    Ok(Trajectory { samples, status })
}

pub fn eventlog_from_csv(text: &str, path: &str) -> Result<EventLog> {
    let mut lines = text.lines();
    check_header(lines.next(), EVENTLOG_HEADER, path)?;
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let p = LineParser { path, line: i + 2 };
        let f = p.fields(line, 7)?;
        let kind = EventKind::parse(f[1]).ok_or_else(|| p.err(format!("unknown kind `{}`", f[1])))?;
        entries.push(LogEntry {
            t: p.f64(f[0])?,
            kind,
            s1: p.opt_f64(f[2])?,
            s2: p.opt_f64(f[3])?,
            predicted_err: p.opt_f64(f[4])?,
            measured_err: p.f64(f[5])?,
            attempts: if f[6].is_empty() {
                None
            } else {
                Some(f[6].parse().map_err(|_| p.err("invalid attempts"))?)
            },
        });
    }
    Ok(EventLog { entries })
}

pub fn trainlog_from_csv(text: &str, path: &str) -> Result<TrainLog> {
    let mut lines = text.lines();
    check_header(lines.next(), TRAINLOG_HEADER, path)?;
    let mut epochs = Vec::new();
    let mut batch_size = 0usize;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let p = LineParser { path, line: i + 2 };
        let f = p.fields(line, 5)?;
        batch_size = f[2].parse().map_err(|_| p.err("invalid batch size"))?;
        epochs.push(EpochRow {
            epoch: f[0].parse().map_err(|_| p.err("invalid epoch"))?,
            lr: p.f64(f[1])?,
            train_rmse: p.f64(f[3])?,
            test_rmse: p.f64(f[4])?,
        });
    }
    Ok(TrainLog { batch_size, epochs })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ControllerParams, ReferenceSignal};
    use proptest::prelude::*;

    fn baseline_controller() -> ClfController {
        ClfController::new(
            ControllerParams::default(),
            ReferenceSignal::default(),
            PlantParams::default(),
        )
    }

    #[test]
    fn collect_counts_records_per_step() {
        let opts = CollectOptions { n_episodes: 1, t_end: 2.5, ..Default::default() };
        let ds = collect_dataset(
            &PlantParams::default(),
            &baseline_controller(),
            &SigmaBinding::default(),
            &opts,
        )
        .unwrap();
        assert_eq!(ds.len(), 2500);
    }

    #[test]
    #[should_panic(expected = "n_episodes")]
    fn collect_rejects_zero_episodes() {
        let opts = CollectOptions { n_episodes: 0, ..Default::default() };
        let _ = collect_dataset(
            &PlantParams::default(),
            &baseline_controller(),
            &SigmaBinding::default(),
            &opts,
        );
    }

    #[test]
    fn collect_is_deterministic() {
        let opts = CollectOptions { n_episodes: 3, t_end: 0.3, seed: 9, ..Default::default() };
        let a = collect_dataset(
            &PlantParams::default(),
            &baseline_controller(),
            &SigmaBinding::default(),
            &opts,
        )
        .unwrap();
        let b = collect_dataset(
            &PlantParams::default(),
            &baseline_controller(),
            &SigmaBinding::default(),
            &opts,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    fn dummy_records(n: usize) -> Vec<SampleRecord> {
        (0..n)
            .map(|i| SampleRecord {
                t: i as f64 * 1e-3,
                x: (i as f64).sin(),
                v: 0.1 * i as f64,
                u: -0.2 * i as f64,
                s1: 12.0,
                s2: 4.0,
                err: 0.01 * i as f64,
            })
            .collect()
    }

    #[test]
    fn split_ratio_exact() {
        let ds = split_dataset(Dataset::from_records(dummy_records(1000)), 0.6, 1).unwrap();
        assert_eq!(ds.train_idx.len(), 600);
        assert_eq!(ds.test_idx.len(), 400);

        let small = split_dataset(Dataset::from_records(dummy_records(5)), 0.6, 1).unwrap();
        assert_eq!(small.train_idx.len(), 3);
        assert_eq!(small.test_idx.len(), 2);
    }

    #[test]
    fn split_too_small() {
        assert!(matches!(
            split_dataset(Dataset::from_records(dummy_records(1)), 0.6, 1),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn split_deterministic() {
        let a = split_dataset(Dataset::from_records(dummy_records(100)), 0.6, 42).unwrap();
        let b = split_dataset(Dataset::from_records(dummy_records(100)), 0.6, 42).unwrap();
        assert_eq!(a.train_idx, b.train_idx);
        assert_eq!(a.test_idx, b.test_idx);
    }

    proptest! {
        #[test]
        fn split_partitions_exactly(n in 2usize..400, seed in 0u64..1000) {
            let ds = split_dataset(Dataset::from_records(dummy_records(n)), 0.6, seed).unwrap();
            prop_assert_eq!(ds.train_idx.len(), (0.6 * n as f64).round() as usize);
            prop_assert_eq!(ds.train_idx.len() + ds.test_idx.len(), n);
            let mut all: Vec<usize> = ds.train_idx.iter().chain(&ds.test_idx).copied().collect();
            all.sort_unstable();
            let expect: Vec<usize> = (0..n).collect();
            prop_assert_eq!(all, expect);
        }
    }

    #[test]
    fn prediction_rmse_cases() {
        assert_eq!(prediction_rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r = prediction_rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!((r - 12.5_f64.sqrt()).abs() < 1e-12);
        assert!(matches!(prediction_rmse(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(
            prediction_rmse(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metrics_match_two_pass_computation() {
        let traj = Trajectory {
            samples: (0..500)
                .map(|i| TrajectorySample {
                    t: i as f64 * 1e-3,
                    x: 0.0,
                    v: 0.0,
                    u: 0.0,
                    qd: 0.0,
                    e: ((i as f64) * 0.37).sin() * 0.2,
                    clf: 0.0,
                    s1: 0.0,
                    s2: 0.0,
                })
                .collect(),
            status: RunStatus::Completed,
        };
        let m = compute_metrics(&traj, 0.1, 100).unwrap();
        // independent two-pass: mean of squares, then sqrt
        let mean_sq =
            traj.samples.iter().map(|s| s.e * s.e).sum::<f64>() / traj.samples.len() as f64;
        let reference = mean_sq.sqrt();
        assert!((m.rmse - reference).abs() / reference.max(1e-300) < 1e-12);
        assert_eq!(m.window_averages.len(), 5);
        assert!(!m.diverged);
    }

    #[test]
    fn metrics_divergence_flag() {
        let traj = Trajectory {
            samples: vec![TrajectorySample {
                t: 0.0, x: 0.0, v: 0.0, u: 0.0, qd: 0.0, e: 0.3, clf: 0.0, s1: 0.0, s2: 0.0,
            }],
            status: RunStatus::Diverged { at_time: 0.001 },
        };
        let m = compute_metrics(&traj, 0.0, 100).unwrap();
        assert!(m.diverged);
        assert_eq!(m.divergence_time, Some(0.001));
    }

    #[test]
    fn csv_empty_dataset_is_header_only() {
        let csv = dataset_to_csv(&Dataset::default());
        assert_eq!(csv, format!("{DATASET_HEADER}\n"));
    }

    #[test]
    fn csv_trajectory_line_count() {
        let traj = Trajectory {
            samples: (0..2500)
                .map(|i| TrajectorySample {
                    t: i as f64 * 1e-3,
                    x: 0.1, v: 0.2, u: 0.3, qd: 0.4, e: 0.5, clf: 0.6, s1: 1.0, s2: 2.0,
                })
                .collect(),
            status: RunStatus::Completed,
        };
        let csv = trajectory_to_csv(&traj);
        assert_eq!(csv.lines().count(), 2501);
    }

    #[test]
    fn csv_dataset_roundtrip_extremes() {
        let ds = Dataset::from_records(vec![
            SampleRecord {
                t: 2.499,
                x: -0.123456789123456,
                v: 1e-17,
                u: -312.0625,
                s1: 50.0,
                s2: -6.25,
                err: 99.99999999999999,
            },
            SampleRecord {
                t: 0.0,
                x: f64::MIN_POSITIVE,
                v: -50.0,
                u: 0.1 + 0.2,
                s1: -50.0,
                s2: 6.25,
                err: 0.0,
            },
        ]);
        let back = dataset_from_csv(&dataset_to_csv(&ds), "mem").unwrap();
        assert_eq!(ds.records, back.records);
    }

    proptest! {
        #[test]
        fn csv_dataset_roundtrip_random(rows in proptest::collection::vec(
            (-1e6f64..1e6, -1e3f64..1e3, -1e3f64..1e3, -1e6f64..1e6, -50f64..50.0, -50f64..50.0, 0f64..100.0),
            0..40,
        )) {
            let ds = Dataset::from_records(rows.into_iter().map(|(t, x, v, u, s1, s2, err)| SampleRecord {
                t, x, v, u, s1, s2, err,
            }).collect());
            let back = dataset_from_csv(&dataset_to_csv(&ds), "mem").unwrap();
            prop_assert_eq!(ds.records, back.records);
        }
    }

    #[test]
    fn csv_trajectory_and_log_roundtrips() {
        let traj = Trajectory {
            samples: (0..5)
                .map(|i| TrajectorySample {
                    t: i as f64 * 1e-3,
                    x: 0.1 * i as f64,
                    v: -0.2,
                    u: 3.7e-11,
                    qd: 0.4,
                    e: 0.4 - 0.1 * i as f64,
                    clf: 1.0 / 3.0,
                    s1: 12.0,
                    s2: 4.0,
                })
                .collect(),
            status: RunStatus::Completed,
        };
        let back = trajectory_from_csv(&trajectory_to_csv(&traj), "mem").unwrap();
        assert_eq!(traj, back);

        let log = EventLog {
            entries: vec![
                LogEntry {
                    t: 0.914,
                    kind: EventKind::SigmaUpdate,
                    s1: Some(-31.5),
                    s2: Some(3.9375),
                    predicted_err: Some(0.0213),
                    measured_err: 0.801,
                    attempts: Some(1),
                },
                LogEntry {
                    t: 1.0,
                    kind: EventKind::Retrain,
                    s1: None,
                    s2: None,
                    predicted_err: None,
                    measured_err: 0.155,
                    attempts: None,
                },
            ],
        };
        let back = eventlog_from_csv(&eventlog_to_csv(&log), "mem").unwrap();
        assert_eq!(log, back);

        let train_log = TrainLog {
            batch_size: 64,
            epochs: vec![
                EpochRow { epoch: 0, lr: 1e-3, train_rmse: 0.11, test_rmse: 0.12 },
                EpochRow { epoch: 1, lr: 1e-3, train_rmse: 0.013, test_rmse: 0.017 },
            ],
        };
        let back = trainlog_from_csv(&trainlog_to_csv(&train_log), "mem").unwrap();
        assert_eq!(train_log, back);
    }

    #[test]
    fn csv_parse_error_carries_line_number() {
        let text = format!("{DATASET_HEADER}\n1,2,3,4,5,6,7\n1,2,oops,4,5,6,7\n");
        match dataset_from_csv(&text, "bad.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
