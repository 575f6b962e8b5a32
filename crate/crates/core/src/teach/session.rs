//! Transport-independent session logic: the env/agent loop of one live
//! teaching session, its feedback queue and controls.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::protocol::{Control, StateUpdate};
use crate::env::{make_env, EnvConstants, EnvState, Environment};
use crate::error::{Error, Result};
use crate::feedback::Feedback;
use crate::harness::config::episode_seed;
use crate::harness::run::learner_config;
use crate::harness::{ExperimentConfig, FeedbackSource, Learner, StepRow};

pub const MIN_STEP_RATE: f64 = 1.0;
pub const MAX_STEP_RATE: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub session_id: String,
    /// Environment, algorithm and hyperparameters. Its episode budget and
    /// seed list are ignored; see `episodes` and `seed`.
    pub experiment: ExperimentConfig,
    /// Seed of the environment resets (episode `k` uses the same initial
    /// state as episode `k` of a harness run with this seed).
    pub seed: u64,
    pub steps_per_second: f64,
    /// Queued feedback stays valid for this many ticks.
    pub feedback_window: u32,
    /// Start paused, e.g. for clients that drive the loop with `step`.
    #[serde(default)]
    pub start_paused: bool,
    /// End the session after this many episodes; unlimited if absent.
    #[serde(default)]
    pub episodes: Option<u32>,
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
    /// Snapshot every this many finished episodes (0: only at the end).
    #[serde(default)]
    pub snapshot_every: u32,
}

impl SessionConfig {
    pub fn new(session_id: impl Into<String>, experiment: ExperimentConfig) -> Self {
        SessionConfig {
            session_id: session_id.into(),
            experiment,
            seed: 0,
            steps_per_second: 20.0,
            feedback_window: 1,
            start_paused: false,
            episodes: None,
            snapshot_dir: None,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = match self.experiment.validate() {
            Err(Error::Config(p)) => p,
            Err(e) => vec![e.to_string()],
            Ok(()) => Vec::new(),
        };
        if self.session_id.is_empty()
            || !self.session_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            problems.push(format!("session_id must be non-empty and use [A-Za-z0-9._-], got '{}'", self.session_id));
        }
        if !(MIN_STEP_RATE..=MAX_STEP_RATE).contains(&self.steps_per_second) {
            problems.push(format!(
                "steps_per_second must lie in [{MIN_STEP_RATE}, {MAX_STEP_RATE}], got {}",
                self.steps_per_second
            ));
        }
        if self.feedback_window == 0 {
            problems.push("feedback_window must be at least 1 step".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Counters reported with every state update.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStats {
    pub ticks: u64,
    pub agent_steps: u64,
    pub feedback_received: u64,
    pub feedback_applied: u64,
    /// Feedback events that changed the models.
    pub mutations: u64,
    /// Replaced by newer feedback before a step consumed it.
    pub dropped_superseded: u64,
    /// Arrived between the end of an episode and the next reset.
    pub dropped_interlude: u64,
    /// Older than the feedback window when the next step ran.
    pub dropped_expired: u64,
    pub rejected: u64,
    pub policy_size: usize,
    pub human_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    DoneInterlude,
    SessionEnded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeedbackOutcome {
    /// Queued for the next step; `superseded` if it replaced older feedback.
    Queued {
        superseded: bool,
    },
    Dropped(DropReason),
}

/// What a control command did.
#[derive(Clone, Debug)]
pub enum ControlEffect {
    /// The visible state changed; broadcast this frame.
    Frame(StateUpdate),
    /// A single `step` ran (or could not run because the session ended).
    Stepped(Option<TickOutput>),
}

/// Output of one tick.
#[derive(Clone, Debug)]
pub struct TickOutput {
    pub update: StateUpdate,
    /// The agent step, absent on reset frames.
    pub row: Option<StepRow>,
    /// Set when this tick finished an episode.
    pub finished_episode: Option<u32>,
}

pub struct Session {
    cfg: SessionConfig,
    env: Box<dyn Environment>,
    learner: Learner,
    state: EnvState,
    episode: u32,
    episode_return: f64,
    /// The last tick finished an episode; the next one resets.
    interlude: bool,
    paused: bool,
    ended: bool,
    tick: u64,
    pending: Option<(Feedback, u64)>,
    stats: SessionStats,
}

impl Session {
    pub fn new(cfg: SessionConfig, constants: &EnvConstants) -> Result<Self> {
        cfg.validate()?;
        let mut env = make_env(cfg.experiment.environment, constants);
        let learner = Learner::new(&learner_config(&cfg.experiment, constants)?)?;
        let state = env.reset(episode_seed(cfg.seed, 0));
        let paused = cfg.start_paused;
        let mut s = Session {
            cfg,
            env,
            learner,
            state,
            episode: 0,
            episode_return: 0.0,
            interlude: false,
            paused,
            ended: false,
            tick: 0,
            pending: None,
            stats: SessionStats::default(),
        };
        s.refresh_sizes();
        if s.cfg.episodes == Some(0) {
            s.ended = true;
        }
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &SessionStats {
        &self.stats
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn episode(&self) -> u32 {
        self.episode
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn steps_per_second(&self) -> f64 {
        self.cfg.steps_per_second
    }

    /// Frame describing the current state without advancing time.
    pub fn current_update(&self) -> StateUpdate {
        self.update(Vec::new(), 0.0, None)
    }

    /// Validates and queues live feedback (newest wins).
    pub fn submit_feedback(&mut self, dims: &[i64]) -> Result<FeedbackOutcome> {
        let expected = self.cfg.experiment.action_dim();
        let parsed = if dims.len() != expected {
            Err(Error::Usage(format!("feedback needs {expected} entries, got {}", dims.len())))
        } else if let Some(v) = dims.iter().find(|v| !(-1..=1).contains(*v)) {
            Err(Error::Usage(format!("feedback entries must be -1, 0 or +1, got {v}")))
        } else {
            Feedback::new(dims.iter().map(|&v| v as i8).collect())
        };
        let feedback = match parsed {
            Ok(f) => f,
            Err(e) => {
                self.stats.rejected += 1;
                return Err(e);
            }
        };
        self.stats.feedback_received += 1;
        if self.ended {
            return Ok(FeedbackOutcome::Dropped(DropReason::SessionEnded));
        }
        if self.interlude {
            self.stats.dropped_interlude += 1;
            return Ok(FeedbackOutcome::Dropped(DropReason::DoneInterlude));
        }
        let superseded = self.pending.replace((feedback, self.tick)).is_some();
        if superseded {
            self.stats.dropped_superseded += 1;
        }
        Ok(FeedbackOutcome::Queued { superseded })
    }

    /// Applies a control command.
    pub fn control(&mut self, c: &Control) -> Result<ControlEffect> {
        if self.ended {
            return Err(Error::Usage("session has ended".into()));
        }
        match c {
            Control::Pause => self.paused = true,
            Control::Resume => self.paused = false,
            Control::Step => {
                if !self.paused {
                    return Err(Error::Usage("step is only valid while paused".into()));
                }
                return Ok(ControlEffect::Stepped(self.advance()?));
            }
            Control::SetRate { steps_per_second } => {
                if !(MIN_STEP_RATE..=MAX_STEP_RATE).contains(steps_per_second) {
                    return Err(Error::Usage(format!(
                        "steps_per_second must lie in [{MIN_STEP_RATE}, {MAX_STEP_RATE}], got {steps_per_second}"
                    )));
                }
                self.cfg.steps_per_second = *steps_per_second;
            }
            Control::Reset => {
                if self.pending.take().is_some() {
                    self.stats.dropped_interlude += 1;
                }
                self.start_next_episode();
            }
            Control::EndSession => {
                self.ended = true;
                self.pending = None;
            }
        }
        Ok(ControlEffect::Frame(self.current_update()))
    }

    /// Advances one tick. Returns `None` while paused or after the end.
    pub fn tick(&mut self) -> Result<Option<TickOutput>> {
        if self.paused {
            return Ok(None);
        }
        self.advance()
    }

    fn advance(&mut self) -> Result<Option<TickOutput>> {
        if self.ended {
            return Ok(None);
        }
        self.tick += 1;
        self.stats.ticks += 1;
        if self.interlude {
            self.start_next_episode();
            if self.ended {
                return Ok(None);
            }
            return Ok(Some(TickOutput { update: self.current_update(), row: None, finished_episode: None }));
        }

        let feedback = match self.pending.take() {
            Some((f, at)) if self.tick - at <= u64::from(self.cfg.feedback_window) => Some(f),
            Some(_) => {
                self.stats.dropped_expired += 1;
                None
            }
            None => None,
        };
        let obs = self.state.observation.clone();
        let proposal = self.learner.propose(&obs)?;
        let before = self.learner.mutations();
        let record = self.learner.apply(&obs, &proposal, feedback.as_ref())?;
        if feedback.is_some() {
            self.stats.feedback_applied += 1;
        }
        self.stats.mutations += (self.learner.mutations() - before) as u64;
        self.stats.agent_steps += 1;
        let scale = self.cfg.experiment.action_scale;
        let command: Vec<f64> = proposal.action.iter().map(|a| a * scale).collect();
        let t = self.env.step(&command)?;
        self.episode_return += t.reward;
        self.state = t.state;
        self.refresh_sizes();
        let finished_episode = t.done.then_some(self.episode);
        if t.done {
            self.interlude = true;
        }
        let update = self.update(proposal.action.clone(), t.reward, record.learning_rate.clone());
        let row = StepRow {
            seed: self.cfg.seed,
            episode: self.episode,
            algorithm: self.cfg.experiment.algorithm.to_string(),
            source: FeedbackSource::Human,
            record,
        };
        Ok(Some(TickOutput { update, row: Some(row), finished_episode }))
    }

    /// Path for a snapshot with the given label, if snapshots are enabled.
    pub fn snapshot_path(&self, label: &str) -> Option<PathBuf> {
        self.cfg.snapshot_dir.as_ref().map(|d| d.join(format!("{}-{label}.snapshot", self.cfg.session_id)))
    }

    /// Whether finishing `episode` should trigger a periodic snapshot.
    pub fn wants_snapshot_after(&self, episode: u32) -> bool {
        self.cfg.snapshot_every > 0 && (episode + 1) % self.cfg.snapshot_every == 0
    }

    fn start_next_episode(&mut self) {
        self.interlude = false;
        self.episode += 1;
        self.episode_return = 0.0;
        if self.cfg.episodes.is_some_and(|n| self.episode >= n) {
            self.ended = true;
            return;
        }
        self.state = self.env.reset(episode_seed(self.cfg.seed, self.episode));
    }

    fn refresh_sizes(&mut self) {
        let (p, h) = self.learner.sizes();
        self.stats.policy_size = p;
        self.stats.human_size = h;
    }

    fn update(&self, action: Vec<f64>, reward: f64, learning_rate: Option<Vec<f64>>) -> StateUpdate {
        StateUpdate {
            session: self.cfg.session_id.clone(),
            episode: self.episode,
            step: self.state.step,
            observation: self.state.observation.clone(),
            action,
            reward,
            episode_return: self.episode_return,
            done: self.state.done,
            paused: self.paused,
            shapes: self.env.render(),
            learning_rate,
            stats: self.stats.clone(),
        }
    }
}
