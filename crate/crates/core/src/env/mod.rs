//! Deterministic benchmark environments with reference controllers.
//!
//! All randomness lives in `reset`; stepping is a pure function of the
//! current state and action, integrated with semi-implicit Euler.

mod cartpole;
mod constants;
mod lander;
mod pendulum;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cartpole::CartPole;
pub use constants::{CartPoleConstants, EnvConstants, LanderConstants, PendulumConstants, CONSTANTS_VERSION};
pub use lander::Lander;
pub use pendulum::Pendulum;

use crate::error::{Error, Result};
use crate::models::ActionBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Pendulum,
    CartPole,
    Lander,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Pendulum, EnvKind::CartPole, EnvKind::Lander];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::CartPole => "cart-pole",
            EnvKind::Lander => "lander",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pendulum" => Ok(EnvKind::Pendulum),
            "cart-pole" | "cartpole" => Ok(EnvKind::CartPole),
            "lander" | "lunar-lander" => Ok(EnvKind::Lander),
            other => Err(Error::Usage(format!("unknown environment '{other}'"))),
        }
    }
}

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub observation_dim: usize,
    pub bounds: ActionBounds,
    pub time_limit: u32,
    pub reward: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub observation: Vec<f64>,
    pub step: u32,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: EnvState,
    /// The action actually applied (after clamping).
    pub action: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Whether the requested action was outside the bounds.
    pub clamped: bool,
}

/// Drawing primitive in normalized viewport coordinates (`[0, 1]²`, y up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Line { from: [f64; 2], to: [f64; 2], width: f64 },
    Polygon { points: Vec<[f64; 2]> },
    Circle { center: [f64; 2], radius: f64 },
}

pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state from the documented distribution.
    fn reset(&mut self, seed: u64) -> EnvState;

    /// Advances one fixed step. Actions outside the bounds are clamped and
    /// flagged; stepping a finished episode is a usage error.
    fn step(&mut self, action: &[f64]) -> Result<Transition>;

    fn state(&self) -> &EnvState;

    /// Deterministic competent controller for the given observation.
    fn reference_action(&self, observation: &[f64]) -> Vec<f64>;

    /// Shapes describing the current configuration.
    fn render(&self) -> Vec<Shape>;
}

pub fn make_env(kind: EnvKind, constants: &EnvConstants) -> Box<dyn Environment> {
    match kind {
        EnvKind::Pendulum => Box::new(Pendulum::new(constants.pendulum.clone())),
        EnvKind::CartPole => Box::new(CartPole::new(constants.cartpole.clone())),
        EnvKind::Lander => Box::new(Lander::new(constants.lander.clone())),
    }
}

pub(crate) fn prepare_action(spec: &EnvSpec, done: bool, action: &[f64]) -> Result<(Vec<f64>, bool)> {
    if done {
        return Err(Error::Usage(format!("{} episode is over; reset before stepping", spec.kind)));
    }
    if action.len() != spec.bounds.dim() {
        return Err(Error::Usage(format!(
            "{} expects {} action dimensions, got {}",
            spec.kind,
            spec.bounds.dim(),
            action.len()
        )));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::Usage("non-finite action".into()));
    }
    let clamped = spec.bounds.clamp(action);
    let was_clamped = clamped != action;
    Ok((clamped, was_clamped))
}

/// Writes one row per transition: observation, action, reward, done.
pub fn write_trajectory<W: Write>(mut w: W, transitions: &[Transition]) -> Result<()> {
    for t in transitions {
        let mut fields: Vec<String> = t.state.observation.iter().map(|v| format!("{v:?}")).collect();
        fields.extend(t.action.iter().map(|v| format!("{v:?}")));
        fields.push(format!("{:?}", t.reward));
        fields.push(u8::from(t.done).to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Runs the reference controller for one episode and returns its return.
pub fn reference_return(env: &mut dyn Environment, seed: u64) -> Result<f64> {
    let mut state = env.reset(seed);
    let mut total = 0.0;
    while !state.done {
        let a = env.reference_action(&state.observation);
        let t = env.step(&a)?;
        total += t.reward;
        state = t.state;
    }
    Ok(total)
}

/// Return of the all-zero policy, a floor for normalizing scores.
pub fn zero_action_return(env: &mut dyn Environment, seed: u64) -> Result<f64> {
    let mut state = env.reset(seed);
    let zero = vec![0.0; env.spec().bounds.dim()];
    let mut total = 0.0;
    while !state.done {
        let t = env.step(&zero)?;
        total += t.reward;
        state = t.state;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing() {
        assert_eq!("CartPole".parse::<EnvKind>().unwrap(), EnvKind::CartPole);
        assert_eq!("cart_pole".parse::<EnvKind>().unwrap(), EnvKind::CartPole);
        assert!("acrobot".parse::<EnvKind>().is_err());
        for k in EnvKind::ALL {
            assert_eq!(k.name().parse::<EnvKind>().unwrap(), k);
        }
    }

    #[test]
    fn trajectory_rows() {
        let t = Transition {
            state: EnvState { observation: vec![0.5, -1.0], step: 1, done: true },
            action: vec![0.25],
            reward: 1.0,
            done: true,
            clamped: false,
        };
        let mut out = Vec::new();
        write_trajectory(&mut out, &[t]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0.5,-1.0,0.25,1.0,1\n");
    }
}
