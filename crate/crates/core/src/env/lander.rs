use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare_action, EnvKind, EnvSpec, EnvState, Environment, LanderConstants, Shape, Transition};
use crate::error::Result;
use crate::models::ActionBounds;

/// Planar rigid-body lander with a main engine, a pair of side thrusters and
/// two legs modelled as stiff point contacts on flat ground.
///
/// Observation (8-D): horizontal and vertical offset from the pad, the two
/// velocities, attitude, angular rate, and one contact flag per leg — all
/// in the normalized units of the classic benchmark.
#[derive(Clone, Debug)]
pub struct Lander {
    c: LanderConstants,
    spec: EnvSpec,
    body: Body,
    contacts: [bool; 2],
    crashed: bool,
    resting: u32,
    prev_shaping: f64,
    state: EnvState,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Body {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    angle: f64,
    rate: f64,
}

const HULL_TOP: f64 = 17.0 / 30.0;
const HULL_TOP_HALF_WIDTH: f64 = 14.0 / 30.0;

impl Lander {
    pub fn new(c: LanderConstants) -> Self {
        let spec = EnvSpec {
            kind: EnvKind::Lander,
            observation_dim: 8,
            bounds: ActionBounds::symmetric(1.0, 2),
            time_limit: c.time_limit,
            reward: "potential shaping on distance, speed, tilt and leg contact; engine costs; +/-100 on landing/crash",
        };
        let mut lander = Lander {
            c,
            spec,
            body: Body::default(),
            contacts: [false; 2],
            crashed: false,
            resting: 0,
            prev_shaping: 0.0,
            state: EnvState { observation: vec![0.0; 8], step: 0, done: false },
        };
        lander.body = Body { x: lander.c.width / 2.0, y: lander.rest_height(), ..Body::default() };
        lander
    }

    fn pad_y(&self) -> f64 {
        self.c.height / 4.0
    }

    fn rest_height(&self) -> f64 {
        self.pad_y() + self.c.leg_down
    }

    fn fps(&self) -> f64 {
        1.0 / self.c.dt
    }

    /// Places the body at an exact configuration given in world units.
    pub fn set_configuration(&mut self, x: f64, y: f64, vx: f64, vy: f64, angle: f64, rate: f64) {
        self.body = Body { x, y, vx, vy, angle, rate };
        self.contacts = self.leg_contacts();
        self.crashed = false;
        self.resting = 0;
        let obs = self.observe();
        self.prev_shaping = shaping(&obs);
        self.state = EnvState { observation: obs, step: 0, done: false };
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    fn world_point(&self, bx: f64, by: f64) -> (f64, f64) {
        let (s, c) = self.body.angle.sin_cos();
        (self.body.x + bx * c - by * s, self.body.y + bx * s + by * c)
    }

    fn legs(&self) -> [(f64, f64); 2] {
        [(-self.c.leg_x, -self.c.leg_down), (self.c.leg_x, -self.c.leg_down)]
    }

    fn leg_contacts(&self) -> [bool; 2] {
        let ground = self.pad_y();
        self.legs().map(|(bx, by)| self.world_point(bx, by).1 <= ground)
    }

    fn hull_touches_ground(&self) -> bool {
        let ground = self.pad_y();
        let corners = [
            (-self.c.hull_half_width, self.c.hull_bottom),
            (self.c.hull_half_width, self.c.hull_bottom),
            (-HULL_TOP_HALF_WIDTH, HULL_TOP),
            (HULL_TOP_HALF_WIDTH, HULL_TOP),
        ];
        corners.iter().any(|&(bx, by)| self.world_point(bx, by).1 <= ground)
    }

    fn observe(&self) -> Vec<f64> {
        let (w, h) = (self.c.width / 2.0, self.c.height / 2.0);
        let b = &self.body;
        vec![
            (b.x - w) / w,
            (b.y - self.rest_height()) / h,
            b.vx * w / self.fps(),
            b.vy * h / self.fps(),
            b.angle,
            20.0 * b.rate / self.fps(),
            f64::from(u8::from(self.contacts[0])),
            f64::from(u8::from(self.contacts[1])),
        ]
    }

    /// Throttle decoding of the continuous benchmark: the main engine fires
    /// at 50–100% for positive commands, a side thruster at 50–100% when
    /// the lateral command exceeds one half in magnitude.
    fn powers(action: &[f64]) -> (f64, f64) {
        let main = if action[0] > 0.0 { (action[0].clamp(0.0, 1.0) + 1.0) / 2.0 } else { 0.0 };
        let side = if action[1].abs() > 0.5 { action[1].signum() * action[1].abs().clamp(0.5, 1.0) } else { 0.0 };
        (main, side)
    }

    fn integrate(&mut self, main: f64, side: f64, dt: f64) {
        let c = &self.c;
        let (s, co) = self.body.angle.sin_cos();
        let up = (-s, co);
        let right = (co, s);
        let mut ax = main * c.main_accel * up.0 + side * c.side_accel * right.0;
        let mut ay = main * c.main_accel * up.1 + side * c.side_accel * right.1 - c.gravity;
        let mut alpha = -side * c.side_accel * c.side_engine_height / c.inertia;

        let ground = self.pad_y();
        for (bx, by) in self.legs() {
            let rx = bx * co - by * s;
            let ry = bx * s + by * co;
            let depth = ground - (self.body.y + ry);
            if depth <= 0.0 {
                continue;
            }
            let pvx = self.body.vx - self.body.rate * ry;
            let pvy = self.body.vy + self.body.rate * rx;
            if -pvy > c.crash_speed {
                self.crashed = true;
            }
            let normal = (c.contact_stiffness * depth - c.contact_damping * pvy).max(0.0);
            let limit = c.contact_friction * normal;
            let tangent = (-c.contact_damping * pvx).clamp(-limit, limit);
            ax += tangent;
            ay += normal;
            alpha += (rx * normal - ry * tangent) / c.inertia;
        }

        self.body.vx += ax * dt;
        self.body.vy += ay * dt;
        self.body.rate += alpha * dt;
        self.body.x += self.body.vx * dt;
        self.body.y += self.body.vy * dt;
        self.body.angle += self.body.rate * dt;
    }
}

fn shaping(s: &[f64]) -> f64 {
    -100.0 * (s[0] * s[0] + s[1] * s[1]).sqrt() - 100.0 * (s[2] * s[2] + s[3] * s[3]).sqrt() - 100.0 * s[4].abs()
        + 10.0 * s[6]
        + 10.0 * s[7]
}

impl Environment for Lander {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = self.c.init_speed;
        let (vx, vy) = (rng.gen_range(-v..=v), rng.gen_range(-v..=v));
        self.set_configuration(self.c.width / 2.0, self.c.height, vx, vy, 0.0, 0.0);
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let (action, clamped) = prepare_action(&self.spec, self.state.done, action)?;
        let (main, side) = Self::powers(&action);
        let n = self.c.substeps.max(1);
        let dt = self.c.dt / f64::from(n);
        for _ in 0..n {
            self.integrate(main, side, dt);
            if self.hull_touches_ground() {
                self.crashed = true;
            }
        }
        self.contacts = self.leg_contacts();
        let obs = self.observe();

        let shape = shaping(&obs);
        let mut reward = shape - self.prev_shaping;
        self.prev_shaping = shape;
        reward -= main * self.c.main_cost + side.abs() * self.c.side_cost;

        let b = &self.body;
        let still = b.vx.hypot(b.vy) < self.c.rest_speed && b.rate.abs() < self.c.rest_speed;
        self.resting = if self.contacts[0] && self.contacts[1] && still { self.resting + 1 } else { 0 };

        let step = self.state.step + 1;
        let mut done = false;
        if self.crashed || obs[0].abs() >= 1.0 {
            reward = -self.c.terminal_reward;
            done = true;
        } else if self.resting >= self.c.rest_steps {
            reward = self.c.terminal_reward;
            done = true;
        }
        done |= step >= self.c.time_limit;
        self.state = EnvState { observation: obs, step, done };
        Ok(Transition { state: self.state.clone(), action, reward, done, clamped })
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    /// PD controller on attitude and descent rate, steering toward the pad.
    fn reference_action(&self, s: &[f64]) -> Vec<f64> {
        let angle_target = (s[0] * 0.5 + s[2]).clamp(-0.4, 0.4);
        let hover_target = 0.55 * s[0].abs();
        let mut angle_todo = (angle_target - s[4]) * 0.5 - s[5];
        let mut hover_todo = (hover_target - s[1]) * 0.5 - s[3] * 0.5;
        if s[6] > 0.5 || s[7] > 0.5 {
            angle_todo = 0.0;
            hover_todo = -s[3] * 0.5;
        }
        vec![(hover_todo * 20.0 - 1.0).clamp(-1.0, 1.0), (-angle_todo * 20.0).clamp(-1.0, 1.0)]
    }

    fn render(&self) -> Vec<Shape> {
        let (w, h) = (self.c.width, self.c.height);
        let to_view = |(x, y): (f64, f64)| [x / w, y / h];
        let ground = self.pad_y() / h;
        let hull = [
            (-HULL_TOP_HALF_WIDTH, HULL_TOP),
            (-self.c.hull_half_width, 0.0),
            (-self.c.hull_half_width, self.c.hull_bottom),
            (self.c.hull_half_width, self.c.hull_bottom),
            (self.c.hull_half_width, 0.0),
            (HULL_TOP_HALF_WIDTH, HULL_TOP),
        ];
        let mut shapes = vec![
            Shape::Line { from: [0.0, ground], to: [1.0, ground], width: 0.005 },
            Shape::Line { from: [0.45, ground], to: [0.45, ground + 0.05], width: 0.004 },
            Shape::Line { from: [0.55, ground], to: [0.55, ground + 0.05], width: 0.004 },
            Shape::Polygon { points: hull.iter().map(|&(bx, by)| to_view(self.world_point(bx, by))).collect() },
        ];
        for (bx, by) in self.legs() {
            shapes.push(Shape::Line {
                from: to_view(self.world_point(bx * 0.6, self.c.hull_bottom)),
                to: to_view(self.world_point(bx, by)),
                width: 0.006,
            });
        }
        shapes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConstants;

    fn env() -> Lander {
        Lander::new(EnvConstants::default().lander)
    }

    #[test]
    fn crash_pays_minus_hundred() {
        let mut l = env();
        let y = l.rest_height() + 0.5;
        l.set_configuration(10.0, y, 0.0, -12.0, 0.0, 0.0);
        let mut last = None;
        for _ in 0..20 {
            let t = l.step(&[-1.0, 0.0]).unwrap();
            if t.done {
                last = Some(t);
                break;
            }
        }
        let t = last.expect("hard impact ends the episode");
        assert!(l.crashed());
        assert_eq!(t.reward, -100.0);
    }

    #[test]
    fn gentle_touchdown_rests_and_pays_bonus() {
        let mut l = env();
        let y = l.rest_height() + 0.05;
        l.set_configuration(10.0, y, 0.0, 0.0, 0.0, 0.0);
        let mut total = None;
        for _ in 0..200 {
            let t = l.step(&[-1.0, 0.0]).unwrap();
            assert!(t.state.observation[6] == 0.0 || t.state.observation[6] == 1.0);
            if t.done {
                total = Some(t.reward);
                break;
            }
        }
        assert_eq!(total, Some(100.0));
        assert!(!l.crashed());
    }

    #[test]
    fn side_thruster_turns_clockwise() {
        let mut l = env();
        l.set_configuration(10.0, 10.0, 0.0, 0.0, 0.0, 0.0);
        let t = l.step(&[-1.0, 1.0]).unwrap();
        assert!(t.state.observation[5] < 0.0);
        assert!(t.state.observation[2] > 0.0);
    }
}
