use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare_action, CartPoleConstants, EnvKind, EnvSpec, EnvState, Environment, Shape, Transition};
use crate::error::Result;
use crate::models::ActionBounds;

/// Cart with a hinged pole under a continuous horizontal force.
///
/// Observation is `[p, ṗ, θ, θ̇]` with θ measured from upright.
#[derive(Clone, Debug)]
pub struct CartPole {
    c: CartPoleConstants,
    spec: EnvSpec,
    x: [f64; 4],
    state: EnvState,
}

/// Discrete-time LQR gains on `[p, ṗ, θ, θ̇]` for the linearized system.
const GAINS: [f64; 4] = [2.784, 5.321, 46.437, 12.048];

impl CartPole {
    pub fn new(c: CartPoleConstants) -> Self {
        let spec = EnvSpec {
            kind: EnvKind::CartPole,
            observation_dim: 4,
            bounds: ActionBounds::symmetric(c.max_force, 1),
            time_limit: c.time_limit,
            reward: "+1 per step until the cart or pole leaves its range",
        };
        CartPole { c, spec, x: [0.0; 4], state: EnvState { observation: vec![0.0; 4], step: 0, done: false } }
    }

    pub fn set_configuration(&mut self, x: [f64; 4]) {
        self.x = x;
        self.state = EnvState { observation: x.to_vec(), step: 0, done: self.out_of_range() };
    }

    fn out_of_range(&self) -> bool {
        self.x[0].abs() > self.c.position_limit || self.x[2].abs() > self.c.angle_limit
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.c.init_range;
        for v in &mut self.x {
            *v = rng.gen_range(-r..=r);
        }
        self.state = EnvState { observation: self.x.to_vec(), step: 0, done: false };
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let (action, clamped) = prepare_action(&self.spec, self.state.done, action)?;
        let c = &self.c;
        let force = action[0];
        let total = c.cart_mass + c.pole_mass;
        let pml = c.pole_mass * c.half_length;
        let [_, _, th, th_dot] = self.x;
        let (sin, cos) = th.sin_cos();
        let temp = (force + pml * th_dot * th_dot * sin) / total;
        let th_acc = (c.gravity * sin - cos * temp) / (c.half_length * (4.0 / 3.0 - c.pole_mass * cos * cos / total));
        let x_acc = temp - pml * th_acc * cos / total;
        self.x[1] += c.dt * x_acc;
        self.x[0] += c.dt * self.x[1];
        self.x[3] += c.dt * th_acc;
        self.x[2] += c.dt * self.x[3];
        let step = self.state.step + 1;
        let done = self.out_of_range() || step >= c.time_limit;
        self.state = EnvState { observation: self.x.to_vec(), step, done };
        Ok(Transition { state: self.state.clone(), action, reward: 1.0, done, clamped })
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn reference_action(&self, obs: &[f64]) -> Vec<f64> {
        let u: f64 = GAINS.iter().zip(obs).map(|(k, v)| k * v).sum();
        vec![u.clamp(-self.c.max_force, self.c.max_force)]
    }

    fn render(&self) -> Vec<Shape> {
        let span = 2.0 * self.c.position_limit + 1.0;
        let cx = 0.5 + self.x[0] / span;
        let cy = 0.3;
        let (hw, hh) = (0.05, 0.025);
        let pole = 2.0 * self.c.half_length / span;
        vec![
            Shape::Line { from: [0.0, cy - hh], to: [1.0, cy - hh], width: 0.005 },
            Shape::Polygon {
                points: vec![[cx - hw, cy - hh], [cx + hw, cy - hh], [cx + hw, cy + hh], [cx - hw, cy + hh]],
            },
            Shape::Line {
                from: [cx, cy + hh],
                to: [cx + pole * self.x[2].sin(), cy + hh + pole * self.x[2].cos()],
                width: 0.015,
            },
        ]
    }
}
