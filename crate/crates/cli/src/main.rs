//! `dvp` — closed-loop simulation, dataset collection, surrogate training,
//! and adaptive tuning for the forced Duffing-Van der Pol plant.
//!
//! Exit codes: 0 success (a diverged run is a reported status, not a
//! failure), 2 usage or input errors, 1 internal errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dvp_core::adaptive::{retrainlog_to_csv, MemoryBuffer};
use dvp_core::harness::{
    self, dataset_from_csv, dataset_to_csv, eventlog_from_csv, trainlog_from_csv,
    trainlog_to_csv, trajectory_from_csv, trajectory_to_csv,
};
use dvp_core::plot::{self, PlotKind, PlotSpec, Series};
use dvp_core::surrogate::feature_row;
use dvp_core::*;
use rand::SeedableRng as _;

#[derive(Parser)]
#[command(name = "dvp", version, about)]
struct Cli {
    /// Run configuration file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override for every seeded stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for generated artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Collect a sigma-sweep dataset.
    Collect(CollectArgs),
    /// Train the error-prediction network on a dataset CSV.
    Train(TrainArgs),
    /// Run the adaptive monitor/retrain loop.
    Adaptive(AdaptiveArgs),
    /// Compute metrics from a trajectory or from checkpoint predictions.
    Evaluate(EvaluateArgs),
    /// Render a deterministic SVG line plot from a CSV artifact.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file with timed interference events.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Also write error and phase-portrait SVG plots.
    #[arg(long)]
    plot: bool,
    /// Override the configured run horizon (s).
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct CollectArgs {
    /// Override the configured episode count.
    #[arg(long)]
    episodes: Option<usize>,
    /// Dataset output path (default `<out-dir>/dataset.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV produced by `collect`.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Add the control signal as a sixth input feature.
    #[arg(long)]
    include_u: bool,
    /// Checkpoint output path (default `<out-dir>/net.json`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdaptiveArgs {
    /// Trained network checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset CSV that seeds the rehearsal memory and error baseline.
    #[arg(long)]
    dataset: PathBuf,
    /// Scenario file with timed interference events.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    max_attempts: Option<usize>,
    /// Sigma binding as `target1,target2`.
    #[arg(long)]
    binding: Option<String>,
    /// Sigma coupling: a ratio, or `uncoupled`.
    #[arg(long)]
    coupling: Option<String>,
    /// Override the configured run horizon (s).
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trajectory CSV to summarize.
    #[arg(long, conflicts_with_all = ["checkpoint", "dataset"])]
    trajectory: Option<PathBuf>,
    /// Checkpoint whose predictions are scored against a dataset.
    #[arg(long, requires = "dataset")]
    checkpoint: Option<PathBuf>,
    #[arg(long, requires = "checkpoint")]
    dataset: Option<PathBuf>,
    /// Transient cutoff for the max-error statistic (s).
    #[arg(long, default_value_t = 0.5)]
    transient: f64,
    /// Write the machine-readable summary here (default `<out-dir>/metrics.json`).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Input CSV (trajectory, event log, or training log depending on kind).
    #[arg(long)]
    input: PathBuf,
    /// One of: error, phase, sigmas, rmse.
    #[arg(long)]
    kind: String,
    /// SVG output path (default `<out-dir>/<kind>.svg`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Input and configuration problems exit 2; numerical/internal failures 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Config(_)
        | Error::UnknownTarget(_)
        | Error::TooSmall { .. }
        | Error::EmptyDataset
        | Error::EmptyInput
        | Error::Untrained
        | Error::DimensionMismatch { .. } => 2,
        Error::SingularMass { .. } | Error::GainDegenerate | Error::DegenerateBatch(_) => 1,
    }
}

fn load_config(cli_config: &Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match cli_config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario> {
    match path {
        Some(p) => Scenario::load(p),
        None => Ok(Scenario::default()),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    harness::write_file(path, &format!("{:#}\n", value))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config, cli.seed)?;
    let out_dir = &cli.out_dir;
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&cfg, out_dir, &args),
        Command::Collect(args) => cmd_collect(&cfg, out_dir, &args),
        Command::Train(args) => cmd_train(&cfg, out_dir, &args),
        Command::Adaptive(args) => cmd_adaptive(&cfg, out_dir, &args),
        Command::Evaluate(args) => cmd_evaluate(out_dir, &args),
        Command::Plot(args) => cmd_plot(out_dir, &args),
    }
}

fn trajectory_summary(traj: &Trajectory, transient: f64) -> serde_json::Value {
    let metrics = compute_metrics(traj, transient, 100).ok();
    serde_json::json!({
        "status": traj.status.as_str(),
        "divergence_time": match traj.status {
            RunStatus::Diverged { at_time } => Some(at_time),
            RunStatus::Completed => None,
        },
        "rows": traj.samples.len(),
        "max_err_after_transient": metrics.as_ref().map(|m| m.max_err_after_transient),
        "rmse": metrics.as_ref().map(|m| m.rmse),
        "transient": transient,
    })
}

fn cmd_simulate(cfg: &RunConfig, out_dir: &Path, args: &SimulateArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let mut opts = cfg.sim_options();
    if let Some(t_end) = args.t_end {
        opts.t_end = t_end;
    }
    let traj = simulate(
        cfg.initial_state(),
        cfg.plant_params(),
        &cfg.clf_controller(),
        &cfg.binding()?,
        &scenario.events,
        &opts,
    )?;
    harness::write_file(&out_dir.join("trajectory.csv"), &trajectory_to_csv(&traj))?;
    let summary = trajectory_summary(&traj, 0.5);
    write_json(&out_dir.join("summary.json"), &summary)?;
    if args.plot {
        harness::write_file(
            &out_dir.join("error.svg"),
            &plot::render(&plot::trajectory_error_plot(&traj)),
        )?;
        harness::write_file(
            &out_dir.join("phase.svg"),
            &plot::render(&plot::trajectory_phase_plot(&traj)),
        )?;
    }
    println!(
        "simulate: status={} rows={} out={}",
        traj.status.as_str(),
        traj.samples.len(),
        out_dir.join("trajectory.csv").display()
    );
    Ok(())
}

fn cmd_collect(cfg: &RunConfig, out_dir: &Path, args: &CollectArgs) -> Result<()> {
    let mut opts = cfg.collect_options();
    if let Some(n) = args.episodes {
        opts.n_episodes = n;
    }
    let ds = collect_dataset(&cfg.plant_params(), &cfg.clf_controller(), &cfg.binding()?, &opts)?;
    let path = args.out.clone().unwrap_or_else(|| out_dir.join("dataset.csv"));
    harness::write_file(&path, &dataset_to_csv(&ds))?;
    println!(
        "collect: episodes={} records={} out={}",
        opts.n_episodes,
        ds.len(),
        path.display()
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig, out_dir: &Path, args: &TrainArgs) -> Result<()> {
    let text = harness::read_file(&args.dataset)?;
    let ds = dataset_from_csv(&text, &args.dataset.display().to_string())?;
    let ds = split_dataset(ds, 0.6, cfg.seed)?;
    let net_cfg = NetConfig {
        input_dim: if args.include_u { 6 } else { 5 },
        seed: cfg.seed,
        ..Default::default()
    };
    let mut net = RegressionNet::new(net_cfg)?;
    let opts = TrainOptions {
        epochs: args.epochs,
        lr0: args.lr,
        batch_size: args.batch_size,
        ..Default::default()
    };
    let log = net.train(&ds, &opts)?;
    let ck_path = args.out.clone().unwrap_or_else(|| out_dir.join("net.json"));
    net.save(&ck_path)?;
    harness::write_file(&out_dir.join("trainlog.csv"), &trainlog_to_csv(&log))?;
    let last = log.epochs.last().expect("epochs >= 1");
    println!(
        "train: epochs={} train_rmse={} test_rmse={} checkpoint={}",
        log.epochs.len(),
        last.train_rmse,
        last.test_rmse,
        ck_path.display()
    );
    Ok(())
}

fn cmd_adaptive(cfg: &RunConfig, out_dir: &Path, args: &AdaptiveArgs) -> Result<()> {
    let mut net = RegressionNet::load(&args.checkpoint)?;
    let text = harness::read_file(&args.dataset)?;
    let ds = dataset_from_csv(&text, &args.dataset.display().to_string())?;
    let ds = split_dataset(ds, 0.6, cfg.seed)?;
    let scenario = load_scenario(&args.scenario)?;

    let mut acfg = cfg.adaptive_config()?;
    if let Some(v) = args.threshold {
        acfg.err_threshold = v;
    }
    if let Some(v) = args.window {
        acfg.window = v;
    }
    if let Some(v) = args.max_attempts {
        acfg.max_attempts = v;
    }
    if let Some(b) = &args.binding {
        acfg.binding = SigmaBinding::parse(b)?;
    }
    if let Some(c) = &args.coupling {
        acfg.coupling = Coupling::parse(c)?;
    }
    acfg.validate()?;
    let mut opts = cfg.sim_options();
    if let Some(t_end) = args.t_end {
        opts.t_end = t_end;
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(acfg.seed);
    let mut buf = MemoryBuffer::from_dataset(&ds, acfg.memory_fraction, &mut rng)?;
    let run = run_adaptive(
        cfg.initial_state(),
        cfg.plant_params(),
        &cfg.clf_controller(),
        &mut net,
        &mut buf,
        &acfg,
        &scenario.events,
        &opts,
        &TrainOptions::default(),
    )?;

    harness::write_file(
        &out_dir.join("adaptive_trajectory.csv"),
        &trajectory_to_csv(&run.trajectory),
    )?;
    harness::write_file(
        &out_dir.join("eventlog.csv"),
        &harness::eventlog_to_csv(&run.event_log),
    )?;
    harness::write_file(&out_dir.join("retrains.csv"), &retrainlog_to_csv(&run.retrain_log))?;
    let mut summary = trajectory_summary(&run.trajectory, 0.5);
    summary["sigma_updates"] =
        serde_json::json!(run.event_log.sigma_updates().count());
    summary["retrains"] = serde_json::json!(run.retrain_log.records.len());
    write_json(&out_dir.join("summary.json"), &summary)?;
    println!(
        "adaptive: status={} rows={} sigma_updates={} retrains={} out={}",
        run.trajectory.status.as_str(),
        run.trajectory.samples.len(),
        run.event_log.sigma_updates().count(),
        run.retrain_log.records.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_evaluate(out_dir: &Path, args: &EvaluateArgs) -> Result<()> {
    let json_path = args.json.clone().unwrap_or_else(|| out_dir.join("metrics.json"));
    match (&args.trajectory, &args.checkpoint, &args.dataset) {
        (Some(traj_path), None, None) => {
            let text = harness::read_file(traj_path)?;
            let traj = trajectory_from_csv(&text, &traj_path.display().to_string())?;
            let metrics = compute_metrics(&traj, args.transient, 100)?;
            write_json(&json_path, &serde_json::to_value(&metrics).expect("serializable"))?;
            println!("metric                     value");
            println!("rmse                       {}", metrics.rmse);
            println!("max_err_after_transient    {}", metrics.max_err_after_transient);
            println!("diverged                   {}", metrics.diverged);
            println!("n_samples                  {}", metrics.n_samples);
            println!("written: {}", json_path.display());
            Ok(())
        }
        (None, Some(ck_path), Some(ds_path)) => {
            let net = RegressionNet::load(ck_path)?;
            let text = harness::read_file(ds_path)?;
            let ds = dataset_from_csv(&text, &ds_path.display().to_string())?;
            if ds.is_empty() {
                return Err(Error::EmptyInput);
            }
            let include_u = net.config().include_u();
            let rows: Vec<Vec<f64>> =
                ds.records.iter().map(|r| feature_row(r, include_u)).collect();
            let targets: Vec<f64> = ds.records.iter().map(|r| r.err).collect();
            let preds = net.forward_infer(&rows)?;
            let rmse = prediction_rmse(&preds, &targets)?;
            let value = serde_json::json!({
                "prediction_rmse": rmse,
                "n_records": ds.len(),
            });
            write_json(&json_path, &value)?;
            println!("metric              value");
            println!("prediction_rmse     {rmse}");
            println!("n_records           {}", ds.len());
            println!("written: {}", json_path.display());
            Ok(())
        }
        _ => Err(Error::Config(
            "evaluate needs either --trajectory or --checkpoint with --dataset".into(),
        )),
    }
}

fn cmd_plot(out_dir: &Path, args: &PlotArgs) -> Result<()> {
    let kind = PlotKind::parse(&args.kind)
        .ok_or_else(|| Error::Config(format!("unknown plot kind `{}`", args.kind)))?;
    let text = harness::read_file(&args.input)?;
    let name = args.input.display().to_string();
    let spec: PlotSpec = match kind {
        PlotKind::Error => plot::trajectory_error_plot(&trajectory_from_csv(&text, &name)?),
        PlotKind::Phase => plot::trajectory_phase_plot(&trajectory_from_csv(&text, &name)?),
        PlotKind::Rmse => plot::trainlog_rmse_plot(&trainlog_from_csv(&text, &name)?),
        PlotKind::Sigmas => {
            // trajectories carry the active sigmas per step; event logs carry
            // them as step changes
            if text.starts_with(harness::TRAJECTORY_HEADER) {
                plot::trajectory_sigma_plot(&trajectory_from_csv(&text, &name)?)
            } else {
                eventlog_sigma_plot(&eventlog_from_csv(&text, &name)?)
            }
        }
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("{}.svg", args.kind)));
    harness::write_file(&out, &plot::render(&spec))?;
    println!("plot: kind={} out={}", args.kind, out.display());
    Ok(())
}

/// Step function of accepted sigma values over time.
fn eventlog_sigma_plot(log: &EventLog) -> PlotSpec {
    let mut s1_points = Vec::new();
    let mut s2_points = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for entry in log.sigma_updates() {
        let (Some(s1), Some(s2)) = (entry.s1, entry.s2) else { continue };
        if let Some((p1, p2)) = prev {
            // horizontal segment up to the update instant
            s1_points.push((entry.t, p1));
            s2_points.push((entry.t, p2));
        }
        s1_points.push((entry.t, s1));
        s2_points.push((entry.t, s2));
        prev = Some((s1, s2));
    }
    PlotSpec {
        title: "accepted sigma updates".into(),
        x_label: "t (s)".into(),
        y_label: "sigma".into(),
        series: vec![
            Series { label: "s1".into(), points: s1_points },
            Series { label: "s2".into(), points: s2_points },
        ],
    }
}
