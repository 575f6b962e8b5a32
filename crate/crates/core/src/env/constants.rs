use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONSTANTS_VERSION: u32 = 1;

const DEFAULT_CONSTANTS: &str = include_str!("../../data/env_constants.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumConstants {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub time_limit: u32,
    pub cost_angle: f64,
    pub cost_velocity: f64,
    pub cost_torque: f64,
    pub init_angle: f64,
    pub init_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartPoleConstants {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub dt: f64,
    pub max_force: f64,
    pub position_limit: f64,
    pub angle_limit: f64,
    pub time_limit: u32,
    pub init_range: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanderConstants {
    pub gravity: f64,
    pub dt: f64,
    pub substeps: u32,
    pub time_limit: u32,
    pub width: f64,
    pub height: f64,
    pub leg_down: f64,
    pub main_accel: f64,
    pub side_accel: f64,
    pub leg_x: f64,
    pub hull_bottom: f64,
    pub hull_half_width: f64,
    pub side_engine_height: f64,
    pub inertia: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub contact_friction: f64,
    pub crash_speed: f64,
    pub init_speed: f64,
    pub rest_speed: f64,
    pub rest_steps: u32,
    pub main_cost: f64,
    pub side_cost: f64,
    pub terminal_reward: f64,
}

/// Pinned dynamics constants for all environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConstants {
    pub version: u32,
    pub pendulum: PendulumConstants,
    pub cartpole: CartPoleConstants,
    pub lander: LanderConstants,
}

impl EnvConstants {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: EnvConstants = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if c.version != CONSTANTS_VERSION {
            return Err(Error::Schema {
                expected: format!("constants v{CONSTANTS_VERSION}"),
                found: format!("constants v{}", c.version),
            });
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("constants serialize to TOML")
    }
}

impl Default for EnvConstants {
    fn default() -> Self {
        EnvConstants::from_toml(DEFAULT_CONSTANTS).expect("bundled constants file is valid")
    }
}
