//! The GPC interaction loop: act, take advice, correct, store.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::Feedback;
use crate::gp::{KernelSpec, ScalingMatrix, ScalingMode};
use crate::models::{ActionBounds, HumanModel, PolicyModel, PolicyOutput, SparsificationConfig};

/// How the correction magnitude is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LearningRateMode {
    /// `r = σ_p + σ_h + c_r`, per action dimension.
    Adaptive,
    /// A fixed step `r_c` regardless of model uncertainty.
    Static { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpcConfig {
    /// Additive learning-rate floor `c_r`, in action units.
    pub constant_rate: f64,
    /// Active-learning gain `c_a`.
    pub al_gain: f64,
    pub learning_rate: LearningRateMode,
    pub scaling_mode: ScalingMode,
    pub policy_kernel: KernelSpec,
    pub human_kernel: KernelSpec,
    /// Static weights over state dimensions (custom-static mode only).
    pub policy_weights: Vec<f64>,
    /// Static weights over state-action dimensions (custom-static mode only).
    pub human_weights: Vec<f64>,
    pub bounds: ActionBounds,
    /// Optional FIFO bound on the human-model dictionaries.
    pub human_capacity: Option<usize>,
}

impl GpcConfig {
    pub fn state_dim(&self) -> usize {
        self.policy_kernel.dim()
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.constant_rate > 0.0 && self.constant_rate.is_finite()) {
            problems.push(format!("constant learning rate must be positive, got {}", self.constant_rate));
        }
        if !(self.al_gain >= 0.0 && self.al_gain.is_finite()) {
            problems.push(format!("active-learning gain must be non-negative, got {}", self.al_gain));
        }
        if let LearningRateMode::Static { rate } = self.learning_rate {
            if !(rate > 0.0 && rate.is_finite()) {
                problems.push(format!("static learning rate must be positive, got {rate}"));
            }
        }
        for (name, k) in [("policy", &self.policy_kernel), ("human", &self.human_kernel)] {
            if let Err(Error::Config(p)) = k.validate() {
                problems.extend(p.into_iter().map(|m| format!("{name} kernel: {m}")));
            }
        }
        let (s, d) = (self.state_dim(), self.action_dim());
        if self.human_kernel.dim() != s + d {
            problems.push(format!(
                "human kernel has {} length-scales, expected state+action = {}",
                self.human_kernel.dim(),
                s + d
            ));
        }
        if self.scaling_mode == ScalingMode::CustomStatic {
            if self.policy_weights.len() != s {
                problems.push(format!("policy weights need {s} entries, got {}", self.policy_weights.len()));
            }
            if self.human_weights.len() != s + d {
                problems.push(format!("human weights need {} entries, got {}", s + d, self.human_weights.len()));
            }
            if self.policy_weights.iter().chain(&self.human_weights).any(|w| !(*w > 0.0 && w.is_finite())) {
                problems.push("scaling weights must be positive".to_string());
            }
        }
        if self.human_capacity == Some(0) {
            problems.push("human-model capacity must be at least 1 when set".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn scaling(&self, weights: &[f64], dim: usize) -> Result<ScalingMatrix> {
        match self.scaling_mode {
            ScalingMode::CustomStatic => ScalingMatrix::custom(weights.to_vec()),
            ScalingMode::NormalizedOnline => Ok(ScalingMatrix::normalized(dim)),
        }
    }
}

/// One executed step, with or without advice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub policy_std: Vec<f64>,
    pub feedback: Option<Feedback>,
    /// Present only when feedback was applied.
    pub learning_rate: Option<Vec<f64>>,
    pub corrected_action: Option<Vec<f64>>,
    /// Active-learning signal, when it was computed for this step.
    pub al_signal: Option<Vec<f64>>,
    pub policy_size: usize,
    pub human_size: usize,
}

#[derive(Clone, Debug)]
pub struct GpcAgent {
    cfg: GpcConfig,
    policy: PolicyModel,
    human: HumanModel,
    sparsify: SparsificationConfig,
    steps: u64,
}

impl GpcAgent {
    pub fn new(cfg: GpcConfig) -> Result<Self> {
        cfg.validate()?;
        let (s, d) = (cfg.state_dim(), cfg.action_dim());
        let policy =
            PolicyModel::new(cfg.policy_kernel.clone(), cfg.scaling(&cfg.policy_weights, s)?, cfg.bounds.clone())?;
        let human =
            HumanModel::new(cfg.human_kernel.clone(), cfg.scaling(&cfg.human_weights, s + d)?, d, cfg.human_capacity)?;
        let sparsify = SparsificationConfig::for_kernel(&cfg.policy_kernel);
        Ok(GpcAgent { cfg, policy, human, sparsify, steps: 0 })
    }

    /// Rebuilds an agent around previously saved models.
    pub fn from_models(cfg: GpcConfig, policy: PolicyModel, human: HumanModel) -> Result<Self> {
        cfg.validate()?;
        let sparsify = SparsificationConfig::for_kernel(&cfg.policy_kernel);
        Ok(GpcAgent { cfg, policy, human, sparsify, steps: 0 })
    }

    pub fn config(&self) -> &GpcConfig {
        &self.cfg
    }

    pub fn policy(&self) -> &PolicyModel {
        &self.policy
    }

    pub fn human(&self) -> &HumanModel {
        &self.human
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Policy action (clamped) and predictive std at `state`.
    pub fn act(&self, state: &[f64]) -> Result<PolicyOutput> {
        self.check_state(state)?;
        self.policy.act(state)
    }

    /// Per-dimension learning rate for the given model uncertainties.
    pub fn learning_rate(&self, policy_std: &[f64], human_std: &[f64]) -> Vec<f64> {
        match self.cfg.learning_rate {
            LearningRateMode::Adaptive => {
                policy_std.iter().zip(human_std).map(|(p, h)| p + h + self.cfg.constant_rate).collect()
            }
            LearningRateMode::Static { rate } => vec![rate; policy_std.len()],
        }
    }

    /// `c_a · σ_h(s, a)` per action dimension. Never mutates the models.
    pub fn active_learning_signal(&self, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        let sigma = self.human.uncertainty(&self.query(state, action)?)?;
        Ok(sigma.into_iter().map(|s| self.cfg.al_gain * s).collect())
    }

    /// Applies (optional) advice to the step that produced `out` at `state`.
    ///
    /// `out` must come from [`act`](Self::act) on the same state in this
    /// step: its std is the one used both for the learning rate and the
    /// sparsification test.
    pub fn update(&mut self, state: &[f64], out: &PolicyOutput, feedback: Option<&Feedback>) -> Result<StepRecord> {
        self.check_state(state)?;
        let step = self.steps;
        self.steps += 1;
        let mut record = StepRecord {
            step,
            state: state.to_vec(),
            action: out.action.clone(),
            policy_std: out.std.clone(),
            feedback: None,
            learning_rate: None,
            corrected_action: None,
            al_signal: None,
            policy_size: self.policy.len(),
            human_size: self.human.events(),
        };
        let Some(h) = feedback else {
            return Ok(record);
        };
        if h.len() != self.cfg.action_dim() {
            return Err(Error::usage(format!(
                "feedback has {} dimensions, agent acts in {}",
                h.len(),
                self.cfg.action_dim()
            )));
        }
        record.feedback = Some(h.clone());
        if h.is_zero() {
            return Ok(record);
        }

        let z = self.query(state, &out.action)?;
        let human_std = self.human.uncertainty(&z)?;
        let rate = self.learning_rate(&out.std, &human_std);
        let corrected: Vec<f64> =
            out.action.iter().zip(h.dims()).zip(&rate).map(|((a, &hd), r)| a + r * f64::from(hd)).collect();

        self.policy.sparsify_and_store(state, &corrected, &out.std, self.sparsify)?;
        self.human.store(&z, h)?;
        if self.cfg.scaling_mode == ScalingMode::NormalizedOnline {
            self.policy.update_normalized_scaling()?;
            self.human.update_normalized_scaling()?;
        }

        record.learning_rate = Some(rate);
        record.corrected_action = Some(corrected);
        record.policy_size = self.policy.len();
        record.human_size = self.human.events();
        Ok(record)
    }

    /// Act and apply `feedback` in one call, for callers whose advice does
    /// not depend on the executed action.
    pub fn agent_step(&mut self, state: &[f64], feedback: Option<&Feedback>) -> Result<(Vec<f64>, StepRecord)> {
        let out = self.act(state)?;
        let record = self.update(state, &out, feedback)?;
        Ok((out.action, record))
    }

    /// Which policy-store path the next corrected action at `state` would
    /// take, given the std reported by `act`.
    pub fn would_replace(&self, policy_std: &[f64]) -> bool {
        let mean = policy_std.iter().sum::<f64>() / policy_std.len().max(1) as f64;
        !self.policy.is_empty() && mean < self.sparsify.threshold
    }

    fn query(&self, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if action.len() != self.cfg.action_dim() {
            return Err(Error::usage(format!(
                "action has {} dimensions, expected {}",
                action.len(),
                self.cfg.action_dim()
            )));
        }
        Ok(state.iter().chain(action).copied().collect())
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.cfg.state_dim() {
            return Err(Error::usage(format!(
                "state has {} dimensions, expected {}",
                state.len(),
                self.cfg.state_dim()
            )));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite state"));
        }
        Ok(())
    }
}
