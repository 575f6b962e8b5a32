//! Experiment configuration: TOML files, dotted-key overrides and the
//! per-environment defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{GpcConfig, LearningRateMode};
use crate::coach::{CoachConfig, RbfFeatureSpace};
use crate::env::{EnvConstants, EnvKind};
use crate::error::{Error, Result};
use crate::gp::{KernelSpec, ScalingMode, Smoothness};
use crate::models::ActionBounds;
use crate::oracle::OracleConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "gpc-cs")]
    GpcCs,
    #[serde(rename = "gpc-ns")]
    GpcNs,
    #[serde(rename = "coach")]
    Coach,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::GpcCs, Algorithm::GpcNs, Algorithm::Coach];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GpcCs => "gpc-cs",
            Algorithm::GpcNs => "gpc-ns",
            Algorithm::Coach => "coach",
        }
    }

    pub fn is_gpc(self) -> bool {
        !matches!(self, Algorithm::Coach)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gpc-cs" | "gpc" => Ok(Algorithm::GpcCs),
            "gpc-ns" => Ok(Algorithm::GpcNs),
            "coach" => Ok(Algorithm::Coach),
            other => Err(Error::Usage(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Active-learning / learning-rate ablation cell.
///
/// | case | feedback rate            | learning rate          |
/// |------|--------------------------|------------------------|
/// | i    | `Δ + γ_c`                | adaptive               |
/// | ii   | `Δ + γ_c`                | static `r_c`           |
/// | iii  | per-episode average of i | adaptive               |
/// | iv   | per-episode average of ii| static `r_c`           |
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationCase {
    #[default]
    None,
    I,
    Ii,
    Iii,
    Iv,
}

impl AblationCase {
    pub const CASES: [AblationCase; 4] = [AblationCase::I, AblationCase::Ii, AblationCase::Iii, AblationCase::Iv];

    pub fn name(self) -> &'static str {
        match self {
            AblationCase::None => "none",
            AblationCase::I => "i",
            AblationCase::Ii => "ii",
            AblationCase::Iii => "iii",
            AblationCase::Iv => "iv",
        }
    }

    pub fn active_learning(self) -> bool {
        matches!(self, AblationCase::I | AblationCase::Ii)
    }

    pub fn static_rate(self) -> bool {
        matches!(self, AblationCase::Ii | AblationCase::Iv)
    }

    pub fn needs_matched_rates(self) -> bool {
        matches!(self, AblationCase::Iii | AblationCase::Iv)
    }

    /// The case whose measured rates a matched case replays.
    pub fn rate_source(self) -> Option<AblationCase> {
        match self {
            AblationCase::Iii => Some(AblationCase::I),
            AblationCase::Iv => Some(AblationCase::Ii),
            _ => None,
        }
    }
}

impl fmt::Display for AblationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "" => Ok(AblationCase::None),
            "i" | "1" => Ok(AblationCase::I),
            "ii" | "2" => Ok(AblationCase::Ii),
            "iii" | "3" => Ok(AblationCase::Iii),
            "iv" | "4" => Ok(AblationCase::Iv),
            other => Err(Error::Usage(format!("unknown ablation case '{other}'"))),
        }
    }
}

/// GPC hyperparameters. Signal magnitudes are standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpcParams {
    pub human_std: f64,
    pub human_length: f64,
    pub policy_std: f64,
    pub policy_length: f64,
    pub policy_smoothness: f64,
    pub constant_rate: f64,
    /// Observation noise as a fraction of each kernel's signal std.
    pub noise_ratio: f64,
    pub policy_weights: Vec<f64>,
    pub human_weights: Vec<f64>,
    /// FIFO bound on the human-model dictionaries; 0 means unbounded.
    pub human_capacity: usize,
    /// Active-learning gain `c_a`.
    pub al_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoachParams {
    pub error_magnitude: f64,
    pub human_rate: f64,
    pub rate_floor: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    /// Static per-step feedback probability `γ`.
    pub feedback_rate: f64,
    /// Convergence range `δ`, in agent action units.
    pub deadband: f64,
    /// Minimum probability `γ_c` in active-learning mode.
    pub min_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub environment: EnvKind,
    pub error_rate: f64,
    #[serde(default)]
    pub ablation: AblationCase,
    pub episodes: u32,
    pub seeds: Vec<u64>,
    /// Agent actions are in units of `action_scale` environment units.
    pub action_scale: f64,
    /// Fixed learning rate `r_c` for the static ablation cases.
    pub static_learning_rate: f64,
    /// Per-episode feedback probabilities for the matched ablation cases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_rates: Option<Vec<f64>>,
    /// Record per-episode wall time (makes logs non-reproducible).
    #[serde(default)]
    pub record_wall_time: bool,
    pub gpc: GpcParams,
    pub coach: CoachParams,
    pub oracle: OracleParams,
}

/// GP hyperparameters of the benchmarks, scaling-mode specific:
/// `(c_h, l_h, c_p, l_p, ν_p, c_r)`.
pub fn table_hyperparameters(env: EnvKind, mode: ScalingMode) -> (f64, f64, f64, f64, f64, f64) {
    use ScalingMode::*;
    match (env, mode) {
        (EnvKind::Pendulum, CustomStatic) => (0.7, 0.1, 0.01, 0.7, 0.5, 0.01),
        (EnvKind::Pendulum, NormalizedOnline) => (0.45, 0.1, 0.03, 0.5, 1.5, 0.02),
        (EnvKind::CartPole, CustomStatic) => (0.01, 0.2, 0.01, 0.2, 1.5, 0.02),
        (EnvKind::CartPole, NormalizedOnline) => (0.08, 0.5, 1e-3, 0.7, 1.5, 0.05),
        (EnvKind::Lander, CustomStatic) => (0.01, 0.2, 0.01, 0.4, 1.5, 0.02),
        (EnvKind::Lander, NormalizedOnline) => (0.08, 0.2, 1e-3, 0.6, 1.5, 0.05),
    }
}

impl ExperimentConfig {
    /// Defaults for one algorithm on one environment.
    pub fn defaults(algorithm: Algorithm, environment: EnvKind) -> Self {
        let mode =
            if algorithm == Algorithm::GpcNs { ScalingMode::NormalizedOnline } else { ScalingMode::CustomStatic };
        let (c_h, l_h, c_p, l_p, nu, c_r) = table_hyperparameters(environment, mode);
        let (policy_weights, human_weights, action_scale, deadband, capacity, coach, episodes) = match environment {
            EnvKind::Pendulum => (
                vec![1.0, 1.0, 2.0],
                vec![1.0, 1.0, 2.0, 1.0],
                2.0,
                0.05,
                0,
                CoachParams {
                    error_magnitude: 50.0,
                    human_rate: 1.0,
                    rate_floor: 1.0,
                    lower: vec![-1.0, -1.0, -8.0],
                    upper: vec![1.0, 1.0, 8.0],
                    counts: vec![9, 9, 11],
                },
                40,
            ),
            EnvKind::CartPole => (
                vec![1.0, 1.0, 0.1, 0.5],
                vec![2.0, 2.0, 0.5, 1.0, 2.0],
                10.0,
                0.02,
                500,
                CoachParams {
                    error_magnitude: 100.0,
                    human_rate: 1.0,
                    rate_floor: 0.3,
                    lower: vec![-2.4, -3.0, -0.26, -3.5],
                    upper: vec![2.4, 3.0, 0.26, 3.5],
                    counts: vec![7, 7, 7, 7],
                },
                40,
            ),
            EnvKind::Lander => (
                vec![1.0; 8],
                vec![1.0; 10],
                1.0,
                0.1,
                500,
                CoachParams {
                    error_magnitude: 0.5,
                    human_rate: 0.3,
                    rate_floor: 0.05,
                    lower: vec![-1.0, -0.2, -1.0, -1.0, -0.6, -1.0, 0.0, 0.0],
                    upper: vec![1.0, 1.5, 1.0, 0.5, 0.6, 1.0, 1.0, 1.0],
                    counts: vec![3; 8],
                },
                60,
            ),
        };
        ExperimentConfig {
            algorithm,
            environment,
            error_rate: 0.0,
            ablation: AblationCase::None,
            episodes,
            seeds: (0..20).collect(),
            action_scale,
            static_learning_rate: 0.4,
            matched_rates: None,
            record_wall_time: false,
            gpc: GpcParams {
                human_std: c_h,
                human_length: l_h,
                policy_std: c_p,
                policy_length: l_p,
                policy_smoothness: nu,
                constant_rate: c_r,
                noise_ratio: 0.1,
                policy_weights,
                human_weights,
                human_capacity: capacity,
                al_gain: 1.0,
            },
            coach,
            oracle: OracleParams { feedback_rate: 0.05, deadband, min_rate: 0.01 },
        }
    }

    /// Defaults for an ablation cell (GPC on the given environment, with
    /// the constants used for the active-learning study).
    pub fn ablation_defaults(algorithm: Algorithm, environment: EnvKind, case: AblationCase) -> Self {
        let mut cfg = ExperimentConfig::defaults(algorithm, environment);
        cfg.ablation = case;
        cfg.error_rate = 0.1;
        cfg.gpc.constant_rate = 0.01;
        cfg.oracle.min_rate = 0.01;
        cfg.static_learning_rate = 0.4;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }

    /// Applies `key.path=value` overrides. Values are parsed as TOML
    /// literals, falling back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(&self.to_toml()).map_err(|e| Error::Parse(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("override '{item}' is not of the form key=value")))?;
            set_dotted(&mut doc, key.trim(), parse_value(raw.trim()))?;
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn state_dim(&self) -> usize {
        match self.environment {
            EnvKind::Pendulum => 3,
            EnvKind::CartPole => 4,
            EnvKind::Lander => 8,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self.environment {
            EnvKind::Lander => 2,
            _ => 1,
        }
    }

    /// Agent-side action bounds.
    pub fn agent_bounds(&self, constants: &EnvConstants) -> ActionBounds {
        let limit = match self.environment {
            EnvKind::Pendulum => constants.pendulum.max_torque,
            EnvKind::CartPole => constants.cartpole.max_force,
            EnvKind::Lander => 1.0,
        };
        ActionBounds::symmetric(limit / self.action_scale, self.action_dim())
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let (s, d) = (self.state_dim(), self.action_dim());
        if !(0.0..=1.0).contains(&self.error_rate) {
            p.push(format!("error_rate must lie in [0, 1], got {}", self.error_rate));
        }
        if self.seeds.is_empty() {
            p.push("seeds must not be empty".into());
        }
        if !(self.action_scale > 0.0 && self.action_scale.is_finite()) {
            p.push(format!("action_scale must be positive, got {}", self.action_scale));
        }
        if !(self.static_learning_rate > 0.0 && self.static_learning_rate.is_finite()) {
            p.push(format!("static_learning_rate must be positive, got {}", self.static_learning_rate));
        }
        if self.ablation != AblationCase::None && !self.algorithm.is_gpc() {
            p.push(format!("ablation case {} requires a GPC algorithm", self.ablation));
        }
        match (&self.matched_rates, self.ablation.needs_matched_rates()) {
            (Some(r), true) => {
                if r.len() != self.episodes as usize {
                    p.push(format!("matched_rates needs one entry per episode ({}), got {}", self.episodes, r.len()));
                }
                if r.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    p.push("matched_rates entries must lie in [0, 1]".into());
                }
            }
            (None, true) if self.episodes > 0 => p.push(format!(
                "ablation case {} needs matched_rates from case {}",
                self.ablation,
                self.ablation.rate_source().unwrap()
            )),
            (Some(_), false) => p.push(format!("matched_rates only apply to cases iii and iv, not {}", self.ablation)),
            _ => {}
        }
        let g = &self.gpc;
        for (name, v) in [
            ("gpc.human_std", g.human_std),
            ("gpc.human_length", g.human_length),
            ("gpc.policy_std", g.policy_std),
            ("gpc.policy_length", g.policy_length),
            ("gpc.constant_rate", g.constant_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                p.push(format!("{name} must be positive, got {v}"));
            }
        }
        if Smoothness::from_nu(g.policy_smoothness).is_err() {
            p.push(format!("gpc.policy_smoothness must be 0.5, 1.5 or 2.5, got {}", g.policy_smoothness));
        }
        if !(g.noise_ratio >= 0.0 && g.noise_ratio.is_finite()) {
            p.push(format!("gpc.noise_ratio must be non-negative, got {}", g.noise_ratio));
        }
        if !(g.al_gain >= 0.0 && g.al_gain.is_finite()) {
            p.push(format!("gpc.al_gain must be non-negative, got {}", g.al_gain));
        }
        if g.policy_weights.len() != s || g.policy_weights.iter().any(|w| !(*w > 0.0)) {
            p.push(format!("gpc.policy_weights needs {s} positive entries"));
        }
        if g.human_weights.len() != s + d || g.human_weights.iter().any(|w| !(*w > 0.0)) {
            p.push(format!("gpc.human_weights needs {} positive entries", s + d));
        }
        let c = &self.coach;
        if c.lower.len() != s || c.upper.len() != s || c.counts.len() != s {
            p.push(format!("coach.lower/upper/counts need {s} entries each"));
        } else if let Err(Error::Config(errs)) =
            RbfFeatureSpace::new(c.lower.clone(), c.upper.clone(), c.counts.clone())
        {
            p.extend(errs.into_iter().map(|e| format!("coach features: {e}")));
        }
        if !(c.error_magnitude > 0.0) {
            p.push(format!("coach.error_magnitude must be positive, got {}", c.error_magnitude));
        }
        if !(c.human_rate > 0.0 && c.human_rate <= 1.0) {
            p.push(format!("coach.human_rate must lie in (0, 1], got {}", c.human_rate));
        }
        if !(c.rate_floor > 0.0) {
            p.push(format!("coach.rate_floor must be positive, got {}", c.rate_floor));
        }
        let o = &self.oracle;
        if !(0.0..=1.0).contains(&o.feedback_rate) {
            p.push(format!("oracle.feedback_rate must lie in [0, 1], got {}", o.feedback_rate));
        }
        if !(o.deadband >= 0.0) {
            p.push(format!("oracle.deadband must be non-negative, got {}", o.deadband));
        }
        if !(0.0..=1.0).contains(&o.min_rate) {
            p.push(format!("oracle.min_rate must lie in [0, 1], got {}", o.min_rate));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    pub fn gpc_config(&self, constants: &EnvConstants) -> Result<GpcConfig> {
        let g = &self.gpc;
        let (s, d) = (self.state_dim(), self.action_dim());
        let nu = Smoothness::from_nu(g.policy_smoothness)?;
        let policy_kernel = KernelSpec::matern(nu, g.policy_std, g.policy_length, s, g.noise_ratio * g.policy_std);
        let human_kernel =
            KernelSpec::squared_exponential(g.human_std, g.human_length, s + d, g.noise_ratio * g.human_std);
        let learning_rate = if self.ablation.static_rate() {
            LearningRateMode::Static { rate: self.static_learning_rate }
        } else {
            LearningRateMode::Adaptive
        };
        let scaling_mode = match self.algorithm {
            Algorithm::GpcNs => ScalingMode::NormalizedOnline,
            _ => ScalingMode::CustomStatic,
        };
        Ok(GpcConfig {
            constant_rate: g.constant_rate,
            al_gain: g.al_gain,
            learning_rate,
            scaling_mode,
            policy_kernel,
            human_kernel,
            policy_weights: g.policy_weights.clone(),
            human_weights: g.human_weights.clone(),
            bounds: self.agent_bounds(constants),
            human_capacity: (g.human_capacity > 0).then_some(g.human_capacity),
        })
    }

    pub fn coach_config(&self, constants: &EnvConstants) -> Result<CoachConfig> {
        let c = &self.coach;
        Ok(CoachConfig {
            error_magnitude: c.error_magnitude,
            human_rate: c.human_rate,
            rate_floor: c.rate_floor,
            features: RbfFeatureSpace::new(c.lower.clone(), c.upper.clone(), c.counts.clone())?,
            bounds: self.agent_bounds(constants),
        })
    }

    pub fn oracle_config(&self, seed: u64) -> OracleConfig {
        OracleConfig {
            feedback_rate: self.oracle.feedback_rate,
            error_rate: self.error_rate,
            deadband: self.oracle.deadband,
            active_learning: self.ablation.active_learning(),
            min_rate: self.oracle.min_rate,
            seed: oracle_seed(seed),
        }
    }
}

/// Oracle stream seed, kept distinct from the environment reset seeds.
pub fn oracle_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x0C0A_C4ED
}

/// Reset seed for one episode of one run seed.
pub fn episode_seed(seed: u64, episode: u32) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(u64::from(episode))
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last =
        parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Usage(format!("empty override key '{key}'")))?;
    let mut table = doc;
    for part in parts {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Usage(format!("override key '{key}': '{part}' is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
