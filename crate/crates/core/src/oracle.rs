//! Simulated teacher comparing executed actions against a reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::Feedback;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Per-step feedback probability `γ` (ignored in active-learning mode).
    pub feedback_rate: f64,
    /// Probability of flipping each emitted non-zero entry.
    pub error_rate: f64,
    /// Per-dimension action gap below which no advice is given.
    pub deadband: f64,
    /// Use `Δ + γ_c` as the per-step probability instead of `γ`.
    pub active_learning: bool,
    /// Minimum rate `γ_c` added to the active-learning signal.
    pub min_rate: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            feedback_rate: 0.05,
            error_rate: 0.0,
            deadband: 0.0,
            active_learning: false,
            min_rate: 0.01,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, p) in [("feedback rate", self.feedback_rate), ("error rate", self.error_rate)] {
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.deadband >= 0.0 && self.deadband.is_finite()) {
            problems.push(format!("deadband must be non-negative, got {}", self.deadband));
        }
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            problems.push(format!("minimum active-learning rate must be non-negative, got {}", self.min_rate));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// What happened on one oracle query; useful for rate bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleDecision {
    /// Probability used for this step.
    pub rate: f64,
    /// Whether the Bernoulli draw fired.
    pub emitted: bool,
    /// Number of entries whose sign was flipped.
    pub flipped: usize,
    pub feedback: Option<Feedback>,
}

#[derive(Clone, Debug)]
pub struct Oracle {
    cfg: OracleConfig,
    rng: ChaCha8Rng,
}

impl Oracle {
    pub fn new(cfg: OracleConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Oracle { cfg, rng })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    /// Probability of advising this step. With active learning on, the
    /// per-dimension signal is averaged before adding the floor.
    pub fn rate(&self, al_signal: Option<&[f64]>) -> f64 {
        match (self.cfg.active_learning, al_signal) {
            (true, Some(delta)) if !delta.is_empty() => {
                let mean = delta.iter().sum::<f64>() / delta.len() as f64;
                (mean + self.cfg.min_rate).clamp(0.0, 1.0)
            }
            (true, _) => self.cfg.min_rate.clamp(0.0, 1.0),
            (false, _) => self.cfg.feedback_rate,
        }
    }

    /// Directional advice before rate and error handling.
    pub fn advice(&self, action: &[f64], reference: &[f64]) -> Vec<i8> {
        action
            .iter()
            .zip(reference)
            .map(|(a, r)| {
                let gap = r - a;
                if gap.abs() > self.cfg.deadband {
                    if gap > 0.0 {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                }
            })
            .collect()
    }

    /// Whether any dimension is outside the deadband.
    pub fn wants_to_advise(&self, action: &[f64], reference: &[f64]) -> bool {
        self.advice(action, reference).iter().any(|v| *v != 0)
    }

    /// One step with an explicit probability (used for replayed rates).
    ///
    /// The Bernoulli draw always consumes randomness, so the stream of draws
    /// does not depend on whether the policy was inside the deadband.
    pub fn feedback_with_rate(&mut self, action: &[f64], reference: &[f64], rate: f64) -> OracleDecision {
        let emitted = self.rng.gen::<f64>() < rate;
        let mut dims = self.advice(action, reference);
        let mut flipped = 0;
        for v in &mut dims {
            // One draw per dimension keeps streams aligned across conditions.
            let flip = self.rng.gen::<f64>() < self.cfg.error_rate;
            if emitted && *v != 0 && flip {
                *v = -*v;
                flipped += 1;
            }
        }
        let feedback =
            if emitted { Feedback::new(dims).expect("advice entries are in {-1, 0, 1}").nonzero() } else { None };
        OracleDecision { rate, emitted, flipped, feedback }
    }

    pub fn feedback(&mut self, action: &[f64], reference: &[f64], al_signal: Option<&[f64]>) -> OracleDecision {
        let rate = self.rate(al_signal);
        self.feedback_with_rate(action, reference, rate)
    }
}
