use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare_action, EnvKind, EnvSpec, EnvState, Environment, PendulumConstants, Shape, Transition};
use crate::error::Result;
use crate::models::ActionBounds;

/// Torque-limited swing-up pendulum (uniform rod, pivot at one end).
///
/// The angle is measured from upright; observation is `[cos θ, sin θ, θ̇]`.
#[derive(Clone, Debug)]
pub struct Pendulum {
    c: PendulumConstants,
    spec: EnvSpec,
    theta: f64,
    rate: f64,
    state: EnvState,
}

/// Linear stabilizer gains around upright (angle, rate).
const UPRIGHT_GAINS: [f64; 2] = [19.8, 6.0];
/// Half-width of the angle window where the stabilizer takes over.
const CAPTURE_ANGLE: f64 = 0.6;
const SWING_GAIN: f64 = 1.0;

pub fn wrap_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

impl Pendulum {
    pub fn new(c: PendulumConstants) -> Self {
        let spec = EnvSpec {
            kind: EnvKind::Pendulum,
            observation_dim: 3,
            bounds: ActionBounds::symmetric(c.max_torque, 1),
            time_limit: c.time_limit,
            reward: "-(angle^2 + 0.1 rate^2 + 0.001 torque^2) per step",
        };
        let mut env =
            Pendulum { c, spec, theta: PI, rate: 0.0, state: EnvState { observation: vec![], step: 0, done: false } };
        env.state.observation = env.observe();
        env
    }

    /// Places the pendulum at an exact configuration (for tests and tools).
    pub fn set_configuration(&mut self, theta: f64, rate: f64) {
        self.theta = theta;
        self.rate = rate;
        self.state = EnvState { observation: self.observe(), step: 0, done: false };
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Mechanical energy relative to upright rest.
    pub fn energy(&self) -> f64 {
        energy(&self.c, self.theta, self.rate)
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.rate]
    }

    fn angular_accel(&self, torque: f64) -> f64 {
        let c = &self.c;
        3.0 * c.gravity / (2.0 * c.length) * self.theta.sin() + 3.0 / (c.mass * c.length * c.length) * torque
    }
}

fn energy(c: &PendulumConstants, theta: f64, rate: f64) -> f64 {
    let inertia = c.mass * c.length * c.length / 3.0;
    0.5 * inertia * rate * rate + c.mass * c.gravity * 0.5 * c.length * (theta.cos() - 1.0)
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.theta = rng.gen_range(-self.c.init_angle..=self.c.init_angle);
        self.rate = rng.gen_range(-self.c.init_rate..=self.c.init_rate);
        self.state = EnvState { observation: self.observe(), step: 0, done: false };
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let (action, clamped) = prepare_action(&self.spec, self.state.done, action)?;
        let u = action[0];
        let th = wrap_angle(self.theta);
        let cost =
            self.c.cost_angle * th * th + self.c.cost_velocity * self.rate * self.rate + self.c.cost_torque * u * u;
        self.rate = (self.rate + self.angular_accel(u) * self.c.dt).clamp(-self.c.max_speed, self.c.max_speed);
        self.theta += self.rate * self.c.dt;
        let step = self.state.step + 1;
        let done = step >= self.c.time_limit;
        self.state = EnvState { observation: self.observe(), step, done };
        Ok(Transition { state: self.state.clone(), action, reward: -cost, done, clamped })
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    /// Energy pumping far from upright, linear stabilization near it.
    fn reference_action(&self, obs: &[f64]) -> Vec<f64> {
        let theta = obs[1].atan2(obs[0]);
        let rate = obs[2];
        let limit = self.c.max_torque;
        let u = if theta.abs() < CAPTURE_ANGLE {
            -(UPRIGHT_GAINS[0] * theta + UPRIGHT_GAINS[1] * rate)
        } else {
            let e = energy(&self.c, theta, rate);
            let dir = if rate >= 0.0 { 1.0 } else { -1.0 };
            -SWING_GAIN * e * dir
        };
        vec![u.clamp(-limit, limit)]
    }

    fn render(&self) -> Vec<Shape> {
        let pivot = [0.5, 0.5];
        let tip = [pivot[0] - 0.4 * self.theta.sin(), pivot[1] + 0.4 * self.theta.cos()];
        vec![Shape::Line { from: pivot, to: tip, width: 0.04 }, Shape::Circle { center: pivot, radius: 0.02 }]
    }
}
