//! The oracle-driven experiment loop.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{episode_seed, AblationCase, Algorithm, ExperimentConfig};
use super::learner::{Learner, LearnerConfig};
use super::runlog::EpisodeRow;
use super::stream::{FeedbackSource, StepRow, StepStreamWriter};
use crate::env::{make_env, EnvConstants, EnvKind};
use crate::error::{Error, Result};
use crate::oracle::Oracle;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for seeds; 0 picks the number of cores.
    pub threads: usize,
    /// Write one step stream per seed here.
    pub stream_dir: Option<PathBuf>,
    /// Write the final model of each seed here.
    pub snapshot_dir: Option<PathBuf>,
}

/// Stable identifier of one grid cell.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let pct = (cfg.error_rate * 100.0).round() as i64;
    format!("{}-{}-e{pct:02}-{}", cfg.algorithm, cfg.environment, cfg.ablation)
}

pub fn learner_config(cfg: &ExperimentConfig, constants: &EnvConstants) -> Result<LearnerConfig> {
    Ok(match cfg.algorithm {
        Algorithm::Coach => LearnerConfig::Coach(cfg.coach_config(constants)?),
        _ => LearnerConfig::Gpc(cfg.gpc_config(constants)?),
    })
}

/// Final state of one seed's run.
#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub rows: Vec<EpisodeRow>,
    pub learner: Learner,
}

/// Runs every episode of one seed, passing each step to `on_step`.
pub fn run_seed(
    cfg: &ExperimentConfig,
    constants: &EnvConstants,
    seed: u64,
    on_step: &mut dyn FnMut(&StepRow) -> Result<()>,
) -> Result<SeedOutcome> {
    cfg.validate()?;
    let id = run_id(cfg);
    let mut env = make_env(cfg.environment, constants);
    let mut learner = Learner::new(&learner_config(cfg, constants)?)?;
    let mut oracle = Oracle::new(cfg.oracle_config(seed))?;
    let scale = cfg.action_scale;
    let mut rows = Vec::with_capacity(cfg.episodes as usize);
    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let mut state = env.reset(episode_seed(seed, episode));
        let (mut ret, mut steps, mut feedback_count) = (0.0, 0u32, 0u32);
        let (mut rate_sum, mut lr_sum, mut lr_events) = (0.0, 0.0, 0u32);
        while !state.done {
            let obs = state.observation;
            let proposal = learner.propose(&obs)?;
            let reference: Vec<f64> = env.reference_action(&obs).iter().map(|u| u / scale).collect();
            let al = if cfg.ablation.active_learning() {
                learner.active_learning_signal(&obs, &proposal.action)?
            } else {
                None
            };
            let decision = match &cfg.matched_rates {
                Some(rates) => oracle.feedback_with_rate(&proposal.action, &reference, rates[episode as usize]),
                None => oracle.feedback(&proposal.action, &reference, al.as_deref()),
            };
            rate_sum += decision.rate;
            let mut record = learner.apply(&obs, &proposal, decision.feedback.as_ref())?;
            record.al_signal = al;
            if let (Some(h), Some(lr)) = (&record.feedback, &record.learning_rate) {
                feedback_count += 1;
                let active: Vec<f64> = h.dims().iter().zip(lr).filter(|(d, _)| **d != 0).map(|(_, r)| *r).collect();
                if !active.is_empty() {
                    lr_sum += active.iter().sum::<f64>() / active.len() as f64;
                    lr_events += 1;
                }
            }
            on_step(&StepRow {
                seed,
                episode,
                algorithm: cfg.algorithm.to_string(),
                source: FeedbackSource::Oracle,
                record,
            })?;
            let command: Vec<f64> = proposal.action.iter().map(|a| a * scale).collect();
            let t = env.step(&command)?;
            ret += t.reward;
            steps += 1;
            state = t.state;
        }
        let (policy_size, human_size) = learner.sizes();
        rows.push(EpisodeRow {
            run_id: id.clone(),
            algorithm: cfg.algorithm.to_string(),
            environment: cfg.environment.to_string(),
            error_rate: cfg.error_rate,
            ablation: cfg.ablation.to_string(),
            seed,
            episode,
            episode_return: ret,
            steps,
            feedback_count,
            feedback_rate: if steps > 0 { rate_sum / f64::from(steps) } else { 0.0 },
            mean_learning_rate: (lr_events > 0).then(|| lr_sum / f64::from(lr_events)),
            policy_size,
            human_size,
            wall_time_ms: cfg.record_wall_time.then(|| started.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(SeedOutcome { seed, rows, learner })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

fn run_one_seed(cfg: &ExperimentConfig, constants: &EnvConstants, seed: u64, opts: &RunOptions) -> Result<SeedOutcome> {
    let id = run_id(cfg);
    let outcome = match &opts.stream_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = BufWriter::new(File::create(dir.join(format!("{id}-seed{seed}.steps.csv")))?);
            let mut writer = StepStreamWriter::new(file, &learner_config(cfg, constants)?)?;
            let outcome = run_seed(cfg, constants, seed, &mut |row| writer.write(row))?;
            writer.flush()?;
            outcome
        }
        None => run_seed(cfg, constants, seed, &mut |_| Ok(()))?,
    };
    if let Some(dir) = &opts.snapshot_dir {
        std::fs::create_dir_all(dir)?;
        let file = BufWriter::new(File::create(dir.join(format!("{id}-seed{seed}.snapshot")))?);
        outcome.learner.write_snapshot(file)?;
    }
    Ok(outcome)
}

/// Runs all seeds of one configuration, in parallel, returning per-seed
/// outcomes in seed-list order.
pub fn run_seeds(cfg: &ExperimentConfig, constants: &EnvConstants, opts: &RunOptions) -> Result<Vec<SeedOutcome>> {
    cfg.validate()?;
    pool(opts.threads)?.install(|| cfg.seeds.par_iter().map(|&seed| run_one_seed(cfg, constants, seed, opts)).collect())
}

/// Runs one configuration and returns its log, ordered by seed then episode.
pub fn run_experiment(cfg: &ExperimentConfig, constants: &EnvConstants, opts: &RunOptions) -> Result<Vec<EpisodeRow>> {
    Ok(run_seeds(cfg, constants, opts)?.into_iter().flat_map(|o| o.rows).collect())
}

/// Per-episode feedback probability averaged over seeds.
pub fn average_episode_rates(rows: &[EpisodeRow], episodes: u32) -> Vec<f64> {
    (0..episodes)
        .map(|ep| {
            let rates: Vec<f64> = rows.iter().filter(|r| r.episode == ep).map(|r| r.feedback_rate).collect();
            if rates.is_empty() {
                0.0
            } else {
                rates.iter().sum::<f64>() / rates.len() as f64
            }
        })
        .collect()
}

/// The four active-learning cells: cases i and ii first, then iii and iv
/// replaying the measured per-episode rates of i and ii.
pub fn run_ablation(base: &ExperimentConfig, constants: &EnvConstants, opts: &RunOptions) -> Result<Vec<EpisodeRow>> {
    let cell = |case: AblationCase, rates: Option<Vec<f64>>| {
        let mut cfg = base.clone();
        cfg.ablation = case;
        cfg.matched_rates = rates;
        run_experiment(&cfg, constants, opts)
    };
    let first = cell(AblationCase::I, None)?;
    let second = cell(AblationCase::Ii, None)?;
    let third = cell(AblationCase::Iii, Some(average_episode_rates(&first, base.episodes)))?;
    let fourth = cell(AblationCase::Iv, Some(average_episode_rates(&second, base.episodes)))?;
    Ok([first, second, third, fourth].concat())
}

/// Error rates of the robustness study.
pub const ERROR_RATES: [f64; 3] = [0.0, 0.1, 0.2];

/// The default suite: every algorithm on every environment at every error
/// rate.
pub fn default_grid() -> Vec<ExperimentConfig> {
    let mut cells = Vec::new();
    for env in EnvKind::ALL {
        for alg in Algorithm::ALL {
            for err in ERROR_RATES {
                let mut cfg = ExperimentConfig::defaults(alg, env);
                cfg.error_rate = err;
                cells.push(cfg);
            }
        }
    }
    cells
}

/// Base configuration of the active-learning study (cart-pole).
pub fn default_ablation() -> ExperimentConfig {
    ExperimentConfig::ablation_defaults(Algorithm::GpcNs, EnvKind::CartPole, AblationCase::I)
}

/// Runs the grid cells and then the active-learning study.
pub fn run_grid(
    cells: &[ExperimentConfig],
    ablation: Option<&ExperimentConfig>,
    constants: &EnvConstants,
    opts: &RunOptions,
) -> Result<Vec<EpisodeRow>> {
    let mut rows = Vec::new();
    for cfg in cells {
        rows.extend(run_experiment(cfg, constants, opts)?);
    }
    if let Some(base) = ablation {
        rows.extend(run_ablation(base, constants, opts)?);
    }
    Ok(rows)
}
