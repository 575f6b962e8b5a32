use gpc_core::env::{EnvConstants, EnvKind};
use gpc_core::harness::{
    average_episode_rates, read_runlog, read_step_stream, replay_session, replay_stream, run_ablation, run_experiment,
    run_seed, summarize, write_runlog, AblationCase, Algorithm, ExperimentConfig, RunOptions, StepStreamWriter,
};
use gpc_core::Error;

fn small(algorithm: Algorithm, env: EnvKind, episodes: u32, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(algorithm, env);
    cfg.episodes = episodes;
    cfg.seeds = seeds;
    cfg
}

fn runlog_text(cfg: &ExperimentConfig, threads: usize) -> String {
    let rows = run_experiment(cfg, &EnvConstants::default(), &RunOptions { threads, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    write_runlog(&mut buf, &rows).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Runs one seed and returns (stream text, final snapshot).
fn streamed(cfg: &ExperimentConfig, seed: u64) -> (String, String) {
    let constants = EnvConstants::default();
    let learner = gpc_core::harness::learner_config(cfg, &constants).unwrap();
    let mut writer = StepStreamWriter::new(Vec::new(), &learner).unwrap();
    let outcome = run_seed(cfg, &constants, seed, &mut |row| writer.write(row)).unwrap();
    let stream = String::from_utf8(writer.into_inner().unwrap()).unwrap();
    (stream, outcome.learner.snapshot_string().unwrap())
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    for alg in [Algorithm::GpcCs, Algorithm::Coach] {
        let cfg = small(alg, EnvKind::Pendulum, 3, vec![0, 1, 2]);
        let one = runlog_text(&cfg, 1);
        assert_eq!(one, runlog_text(&cfg, 1), "{alg}");
        assert_eq!(one, runlog_text(&cfg, 3), "{alg}");
        let rows = read_runlog(one.as_bytes()).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.windows(2).all(|w| (w[0].seed, w[0].episode) < (w[1].seed, w[1].episode)));
    }
}

#[test]
fn zero_episodes_gives_an_empty_log() {
    let cfg = small(Algorithm::GpcNs, EnvKind::CartPole, 0, vec![0, 1]);
    let text = runlog_text(&cfg, 1);
    assert!(read_runlog(text.as_bytes()).unwrap().is_empty());
    assert!(summarize(&[], 3).unwrap().is_empty());
}

#[test]
fn matched_cases_replay_the_measured_rates() {
    let mut cfg = ExperimentConfig::ablation_defaults(Algorithm::GpcNs, EnvKind::CartPole, AblationCase::I);
    cfg.episodes = 2;
    cfg.seeds = vec![3, 4];
    let rows = run_ablation(&cfg, &EnvConstants::default(), &RunOptions { threads: 1, ..Default::default() }).unwrap();
    let case = |name: &str| rows.iter().filter(|r| r.ablation == name).cloned().collect::<Vec<_>>();
    for (source, matched) in [("i", "iii"), ("ii", "iv")] {
        let (source, matched) = (case(source), case(matched));
        assert_eq!(source.len(), 4);
        let want = average_episode_rates(&source, 2);
        let got = average_episode_rates(&matched, 2);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "matched {got:?} vs measured {want:?}");
        }
    }
    for r in case("ii").iter().chain(&case("iv")) {
        if let Some(lr) = r.mean_learning_rate {
            assert!((lr - cfg.static_learning_rate).abs() < 1e-12);
        }
    }
}

#[test]
fn replaying_a_stream_reproduces_the_final_model() {
    for (alg, env) in [
        (Algorithm::GpcCs, EnvKind::Pendulum),
        (Algorithm::GpcNs, EnvKind::CartPole),
        (Algorithm::Coach, EnvKind::Pendulum),
    ] {
        let mut cfg = small(alg, env, 3, vec![5]);
        cfg.error_rate = 0.1;
        let (stream, snapshot) = streamed(&cfg, 5);
        let replay = replay_session(stream.as_bytes()).unwrap();
        assert_eq!(replay.action_mismatches, 0, "{alg} {env}");
        assert_eq!(replay.learner.snapshot_string().unwrap(), snapshot, "{alg} {env}");
    }
}

#[test]
fn dropping_one_feedback_changes_the_replay() {
    let cfg = small(Algorithm::GpcCs, EnvKind::Pendulum, 2, vec![7]);
    let (stream, snapshot) = streamed(&cfg, 7);
    let mut parsed = read_step_stream(stream.as_bytes()).unwrap();
    let k = parsed.rows.iter().position(|r| r.record.feedback.is_some()).expect("some feedback");
    parsed.rows.remove(k);
    let replay = replay_stream(&parsed).unwrap();
    assert!(replay.action_mismatches > 0);
    assert_ne!(replay.learner.snapshot_string().unwrap(), snapshot);
}

#[test]
fn unknown_stream_versions_are_usage_errors() {
    let cfg = small(Algorithm::GpcCs, EnvKind::Pendulum, 1, vec![0]);
    let (stream, _) = streamed(&cfg, 0);
    let bumped = stream.replacen("v1", "v9", 1);
    match replay_session(bumped.as_bytes()) {
        Err(Error::Usage(msg)) => assert!(msg.contains("v9"), "{msg}"),
        other => panic!("expected a usage error, got {other:?}"),
    }
    assert!(read_runlog("#gpc-runlog v2\n".as_bytes()).is_err());
}

#[test]
fn summaries_aggregate_over_seeds() {
    let cfg = small(Algorithm::GpcNs, EnvKind::Pendulum, 4, vec![0, 1, 2]);
    let rows = read_runlog(runlog_text(&cfg, 1).as_bytes()).unwrap();
    let summary = summarize(&rows, 2).unwrap();
    assert_eq!(summary.len(), 4);
    let gpc = cfg.gpc_config(&EnvConstants::default()).unwrap();
    let ceiling = gpc.policy_kernel.signal_std() + gpc.human_kernel.signal_std() + gpc.constant_rate;
    for s in &summary {
        assert_eq!(s.seeds, 3);
        let returns: Vec<f64> = rows.iter().filter(|r| r.episode == s.episode).map(|r| r.episode_return).collect();
        assert!((s.return_mean - returns.iter().sum::<f64>() / 3.0).abs() < 1e-9);
        if let Some(lr) = s.learning_rate_mean {
            assert!(lr >= gpc.constant_rate && lr <= ceiling, "lr {lr}");
        }
    }
    assert!((summary[1].return_smoothed - (summary[0].return_mean + summary[1].return_mean) / 2.0).abs() < 1e-9);
}

#[test]
fn config_round_trips_and_rejects_nonsense() {
    let cfg = ExperimentConfig::defaults(Algorithm::Coach, EnvKind::Lander);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(cfg.with_overrides(&["error_rate=1.5"]).is_err());
    assert!(cfg.with_overrides(&["no_such_key=1"]).is_err());
    assert_eq!(cfg.with_overrides(&["episodes=7"]).unwrap().episodes, 7);
}
