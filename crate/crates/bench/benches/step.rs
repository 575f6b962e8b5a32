use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gpc_core::env::{make_env, EnvConstants, EnvKind};
use gpc_core::harness::run::learner_config;
use gpc_core::harness::{Algorithm, ExperimentConfig, Learner};
use gpc_core::Feedback;

/// A cart-pole learner after `corrections` alternating corrections along a
/// rollout, so its models hold a realistic number of points.
fn trained(algorithm: Algorithm, corrections: usize) -> (Learner, Vec<Vec<f64>>) {
    let constants = EnvConstants::default();
    let cfg = ExperimentConfig::defaults(algorithm, EnvKind::CartPole);
    let mut learner = Learner::new(&learner_config(&cfg, &constants).unwrap()).unwrap();
    let mut env = make_env(EnvKind::CartPole, &constants);
    let mut states = Vec::new();
    let mut state = env.reset(0);
    let mut episode = 0;
    for k in 0..corrections {
        let obs = state.observation.clone();
        let proposal = learner.propose(&obs).unwrap();
        let reference = env.reference_action(&obs)[0] / cfg.action_scale;
        let sign = if reference > proposal.action[0] { 1 } else { -1 };
        learner.apply(&obs, &proposal, Some(&Feedback::new(vec![sign]).unwrap())).unwrap();
        states.push(obs);
        state = env.step(&[proposal.action[0] * cfg.action_scale]).unwrap().state;
        if state.done || k % 50 == 49 {
            episode += 1;
            state = env.reset(episode);
        }
    }
    (learner, states)
}

fn learner_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("learner_step");
    for algorithm in Algorithm::ALL {
        for corrections in [50, 300] {
            let (learner, states) = trained(algorithm, corrections);
            let state = states[states.len() / 2].clone();
            let id = BenchmarkId::new(algorithm.name(), corrections);
            group.bench_with_input(id, &corrections, |b, _| {
                b.iter_batched(
                    || learner.clone(),
                    |mut l| {
                        let p = l.propose(black_box(&state)).unwrap();
                        l.apply(&state, &p, Some(&Feedback::new(vec![1]).unwrap())).unwrap()
                    },
                    criterion::BatchSize::LargeInput,
                )
            });
        }
    }
    group.finish();
}

fn env_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("env_step");
    let constants = EnvConstants::default();
    for kind in EnvKind::ALL {
        let mut env = make_env(kind, &constants);
        let mut state = env.reset(7);
        group.bench_function(kind.name(), |b| {
            b.iter(|| {
                let action = env.reference_action(&state.observation);
                state = env.step(black_box(&action)).unwrap().state;
                if state.done {
                    state = env.reset(7);
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, learner_step, env_step);
criterion_main!(benches);
