//! A single interface over the GPC agent and the COACH baseline, so the
//! experiment loop, replay and the teaching service share one code path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agent::{GpcAgent, GpcConfig, StepRecord};
use crate::coach::{CoachAgent, CoachConfig};
use crate::error::{Error, Result};
use crate::feedback::Feedback;
use crate::models::{write_snapshot, PolicyOutput};

/// Everything needed to rebuild a fresh learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerConfig {
    Gpc(GpcConfig),
    Coach(CoachConfig),
}

#[derive(Clone, Debug)]
pub enum Learner {
    Gpc(GpcAgent),
    Coach(CoachAgent),
}

/// The action chosen at one state, with what the update needs later.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub action: Vec<f64>,
    pending: Pending,
}

#[derive(Clone, Debug)]
enum Pending {
    Gpc(PolicyOutput),
    Coach(Vec<f64>),
}

pub const COACH_SNAPSHOT_VERSION: &str = "v1";

impl Learner {
    pub fn new(cfg: &LearnerConfig) -> Result<Self> {
        Ok(match cfg {
            LearnerConfig::Gpc(c) => Learner::Gpc(GpcAgent::new(c.clone())?),
            LearnerConfig::Coach(c) => Learner::Coach(CoachAgent::new(c.clone())?),
        })
    }

    pub fn config(&self) -> LearnerConfig {
        match self {
            Learner::Gpc(a) => LearnerConfig::Gpc(a.config().clone()),
            Learner::Coach(a) => LearnerConfig::Coach(a.config().clone()),
        }
    }

    pub fn propose(&self, state: &[f64]) -> Result<Proposal> {
        match self {
            Learner::Gpc(a) => {
                let out = a.act(state)?;
                Ok(Proposal { action: out.action.clone(), pending: Pending::Gpc(out) })
            }
            Learner::Coach(a) => {
                let (action, phi) = a.act(state)?;
                Ok(Proposal { action, pending: Pending::Coach(phi) })
            }
        }
    }

    /// Active-learning signal at `(state, action)`; `None` for learners
    /// without a human-model uncertainty.
    pub fn active_learning_signal(&self, state: &[f64], action: &[f64]) -> Result<Option<Vec<f64>>> {
        match self {
            Learner::Gpc(a) => a.active_learning_signal(state, action).map(Some),
            Learner::Coach(_) => Ok(None),
        }
    }

    pub fn apply(&mut self, state: &[f64], proposal: &Proposal, feedback: Option<&Feedback>) -> Result<StepRecord> {
        match (self, &proposal.pending) {
            (Learner::Gpc(a), Pending::Gpc(out)) => a.update(state, out, feedback),
            (Learner::Coach(a), Pending::Coach(phi)) => a.update(state, &proposal.action, phi, feedback),
            _ => Err(Error::usage("proposal was produced by a different learner kind")),
        }
    }

    /// Number of feedback events that changed the models.
    pub fn mutations(&self) -> usize {
        match self {
            Learner::Gpc(a) => a.human().events(),
            Learner::Coach(a) => a.events(),
        }
    }

    /// `(policy dictionary size, human dictionary size)`; feature count and
    /// event count for COACH.
    pub fn sizes(&self) -> (usize, usize) {
        match self {
            Learner::Gpc(a) => (a.policy().len(), a.human().sizes().into_iter().max().unwrap_or(0)),
            Learner::Coach(a) => (a.config().features.len(), a.events()),
        }
    }

    /// Plain-text model snapshot (the GP snapshot format for GPC, a weight
    /// table for COACH).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        match self {
            Learner::Gpc(a) => write_snapshot(w, a.policy(), a.human()),
            Learner::Coach(a) => {
                writeln!(w, "#coach-snapshot {COACH_SNAPSHOT_VERSION}")?;
                for (name, weights) in [("theta", a.theta()), ("psi", a.psi())] {
                    for (d, row) in weights.iter().enumerate() {
                        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                        writeln!(w, "#{name} {d}")?;
                        writeln!(w, "{}", cells.join(","))?;
                    }
                }
                Ok(())
            }
        }
    }

    pub fn snapshot_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)?;
        Ok(String::from_utf8(buf).expect("snapshots are UTF-8"))
    }
}
