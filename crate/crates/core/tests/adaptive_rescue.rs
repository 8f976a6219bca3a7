//! The failure-prevention story end to end: a run whose controller gains are
//! overwritten with destabilizing values at t = 0 diverges on its own, but
//! the adaptive loop keeps the same run alive to the horizon by re-tuning
//! the gains through the surrogate gate.

use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

use dvp_core::adaptive::MemoryBuffer;
use dvp_core::*;

/// Destabilizing pair: a negative position-error gain turns the closed loop
/// into a saddle growing at about 10/s, slow enough that the trigger state
/// stays near the training distribution but fatal within the horizon.
const BAD_GAINS: EventAction = EventAction::SetControllerGains {
    gamma1: 4.0,
    gamma2: -40.0,
    k: 115.0,
};

#[test]
fn adaptive_loop_prevents_divergence_from_bad_initial_gains() {
    let cfg = RunConfig::default();
    let binding = cfg.binding().unwrap();
    let events = [ScenarioEvent { at_time: 0.0, action: BAD_GAINS }];
    let opts = SimOptions { t_end: 1.5, ..cfg.sim_options() };

    // without the monitor the run diverges
    let plain = simulate(
        cfg.initial_state(),
        cfg.plant_params(),
        &cfg.clf_controller(),
        &binding,
        &events,
        &opts,
    )
    .unwrap();
    let RunStatus::Diverged { at_time } = plain.status else {
        panic!("the mis-initialized run must diverge on its own");
    };
    assert!(at_time < 1.5, "divergence expected within the horizon, got {at_time}");

    // the surrogate's sweep includes unstable gain pairs, so states seen
    // during the excursion are in-distribution for the gate
    let collect = CollectOptions {
        n_episodes: 10,
        t_end: 1.0,
        seed: cfg.seed,
        coupling: Coupling::Uncoupled,
        ..Default::default()
    };
    let ds = collect_dataset(&cfg.plant_params(), &cfg.clf_controller(), &binding, &collect).unwrap();
    let ds = split_dataset(ds, 0.6, cfg.seed).unwrap();
    let mut net = RegressionNet::new(NetConfig { seed: cfg.seed, ..Default::default() }).unwrap();
    let topts = TrainOptions { epochs: 2, ..Default::default() };
    net.train(&ds, &topts).unwrap();

    let acfg = cfg.adaptive_config().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(acfg.seed);
    let mut buf = MemoryBuffer::from_dataset(&ds, acfg.memory_fraction, &mut rng).unwrap();
    let run = run_adaptive(
        cfg.initial_state(),
        cfg.plant_params(),
        &cfg.clf_controller(),
        &mut net,
        &mut buf,
        &acfg,
        &events,
        &opts,
        &topts,
    )
    .unwrap();

    assert_eq!(
        run.trajectory.status,
        RunStatus::Completed,
        "the adaptive loop must keep the run alive to t_end (updates: {})",
        run.event_log.sigma_updates().count()
    );
    assert!(
        run.event_log.sigma_updates().count() >= 1,
        "survival must come from accepted sigma updates"
    );
    // the audit that every update passed the prediction gate
    for entry in run.event_log.sigma_updates() {
        assert!(entry.predicted_err.unwrap() < entry.measured_err);
    }
}
