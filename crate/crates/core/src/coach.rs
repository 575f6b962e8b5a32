//! COACH baseline over a normalized RBF grid.

use serde::{Deserialize, Serialize};

use crate::agent::StepRecord;
use crate::error::{Error, Result};
use crate::feedback::Feedback;
use crate::models::ActionBounds;

/// Evenly spaced Gaussian centers per input dimension, combined as a full
/// tensor grid. Activations are normalized to sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfFeatureSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RbfFeatureSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let space = RbfFeatureSpace { lower, upper, counts };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.lower.len() != self.upper.len() || self.lower.len() != self.counts.len() || self.lower.is_empty() {
            problems.push("feature space needs matching, non-empty lower/upper/count vectors".to_string());
        }
        for (d, ((l, u), c)) in self.lower.iter().zip(&self.upper).zip(&self.counts).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                problems.push(format!("dimension {d}: bounds must be finite with lower <= upper"));
            }
            if *c == 0 {
                problems.push(format!("dimension {d}: center count must be at least 1"));
            }
            if *c > 1 && l == u {
                problems.push(format!("dimension {d}: several centers need a non-empty interval"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn centers(&self, d: usize) -> (Vec<f64>, f64) {
        let (l, u, c) = (self.lower[d], self.upper[d], self.counts[d]);
        if c == 1 {
            return (vec![0.5 * (l + u)], 1.0);
        }
        let spacing = (u - l) / (c - 1) as f64;
        ((0..c).map(|i| l + spacing * i as f64).collect(), spacing)
    }

    /// Normalized per-dimension activations; the normalized tensor-product
    /// feature is the product of these.
    fn axis_activations(&self, d: usize, x: f64) -> Vec<f64> {
        let (centers, width) = self.centers(d);
        let logits: Vec<f64> = centers.iter().map(|c| -0.5 * ((x - c) / width).powi(2)).collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|g| (g - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// Feature vector `φ(s)`; the first dimension varies slowest.
    pub fn features(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.dim() {
            return Err(Error::usage(format!("state has {} dimensions, feature space {}", s.len(), self.dim())));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite state"));
        }
        let mut phi = vec![1.0];
        for (d, &x) in s.iter().enumerate() {
            let axis = self.axis_activations(d, x);
            phi = phi.iter().flat_map(|p| axis.iter().map(move |a| p * a)).collect();
        }
        Ok(phi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachConfig {
    /// Policy step size `e`, in action units.
    pub error_magnitude: f64,
    /// Human-model learning rate `β`.
    pub human_rate: f64,
    /// Learning-rate floor `c_c`.
    pub rate_floor: f64,
    pub features: RbfFeatureSpace,
    pub bounds: ActionBounds,
}

impl CoachConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.error_magnitude > 0.0 && self.error_magnitude.is_finite()) {
            problems.push(format!("policy step size must be positive, got {}", self.error_magnitude));
        }
        if !(self.human_rate > 0.0 && self.human_rate <= 1.0) {
            problems.push(format!("human-model rate must lie in (0, 1], got {}", self.human_rate));
        }
        if !(self.rate_floor > 0.0 && self.rate_floor.is_finite()) {
            problems.push(format!("learning-rate floor must be positive, got {}", self.rate_floor));
        }
        if let Err(Error::Config(p)) = self.features.validate() {
            problems.extend(p);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoachAgent {
    cfg: CoachConfig,
    /// Policy weights, one vector per action dimension.
    theta: Vec<Vec<f64>>,
    /// Human-model weights, one vector per action dimension.
    psi: Vec<Vec<f64>>,
    steps: u64,
    events: usize,
}

impl CoachAgent {
    pub fn new(cfg: CoachConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.features.len();
        let d = cfg.bounds.dim();
        Ok(CoachAgent { theta: vec![vec![0.0; n]; d], psi: vec![vec![0.0; n]; d], cfg, steps: 0, events: 0 })
    }

    pub fn config(&self) -> &CoachConfig {
        &self.cfg
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn psi(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn events(&self) -> usize {
        self.events
    }

    /// Clamped action `θᵀφ(s)` and the features it was computed from.
    pub fn act(&self, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let phi = self.cfg.features.features(s)?;
        let raw: Vec<f64> = self.theta.iter().map(|t| dot(t, &phi)).collect();
        Ok((self.cfg.bounds.clamp(&raw), phi))
    }

    /// Human-model prediction `ψᵀφ` per action dimension.
    pub fn human_estimate(&self, phi: &[f64]) -> Vec<f64> {
        self.psi.iter().map(|p| dot(p, phi)).collect()
    }

    /// Applies advice at the step whose features are `phi`.
    pub fn update(
        &mut self,
        s: &[f64],
        action: &[f64],
        phi: &[f64],
        feedback: Option<&Feedback>,
    ) -> Result<StepRecord> {
        let step = self.steps;
        self.steps += 1;
        let mut record = StepRecord {
            step,
            state: s.to_vec(),
            action: action.to_vec(),
            policy_std: Vec::new(),
            feedback: feedback.cloned(),
            learning_rate: None,
            corrected_action: None,
            al_signal: None,
            policy_size: phi.len(),
            human_size: self.events,
        };
        let Some(h) = feedback else {
            return Ok(record);
        };
        if h.len() != self.theta.len() {
            return Err(Error::usage(format!(
                "feedback has {} dimensions, agent acts in {}",
                h.len(),
                self.theta.len()
            )));
        }
        if h.is_zero() {
            return Ok(record);
        }
        let (beta, e, cc) = (self.cfg.human_rate, self.cfg.error_magnitude, self.cfg.rate_floor);
        let mut alphas = Vec::with_capacity(h.len());
        for ((theta, psi), &hd) in self.theta.iter_mut().zip(&mut self.psi).zip(h.dims()) {
            if hd == 0 {
                alphas.push(0.0);
                continue;
            }
            let hd = f64::from(hd);
            let estimate = dot(psi, phi);
            for (p, f) in psi.iter_mut().zip(phi) {
                *p += beta * (hd - estimate) * f;
            }
            let alpha = estimate.abs() + cc;
            for (t, f) in theta.iter_mut().zip(phi) {
                *t += alpha * f * hd * e;
            }
            alphas.push(alpha);
        }
        self.events += 1;
        record.learning_rate = Some(alphas);
        record.human_size = self.events;
        Ok(record)
    }

    /// Act and apply `feedback` in one call.
    pub fn coach_step(&mut self, s: &[f64], feedback: Option<&Feedback>) -> Result<(Vec<f64>, StepRecord)> {
        let (a, phi) = self.act(s)?;
        let rec = self.update(s, &a, &phi, feedback)?;
        Ok((a, rec))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> RbfFeatureSpace {
        RbfFeatureSpace::new(vec![-1.0], vec![1.0], vec![3]).unwrap()
    }

    fn agent(space: RbfFeatureSpace) -> CoachAgent {
        let d = 1;
        CoachAgent::new(CoachConfig {
            error_magnitude: 0.5,
            human_rate: 0.3,
            rate_floor: 0.05,
            features: space,
            bounds: ActionBounds::symmetric(10.0, d),
        })
        .unwrap()
    }

    #[test]
    fn features_are_normalized_and_symmetric() {
        let phi = line().features(&[0.0]).unwrap();
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(phi[0], phi[2]);
        assert!(phi[1] > phi[0]);
        let grid = RbfFeatureSpace::new(vec![-2.0, 0.0, -5.0], vec![2.0, 1.0, 5.0], vec![4, 3, 5]).unwrap();
        let phi = grid.features(&[0.3, 0.9, 40.0]).unwrap();
        assert_eq!(phi.len(), 60);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_state_update_arithmetic() {
        let mut a = agent(line());
        let phi = a.config().features.features(&[0.2]).unwrap();
        let (_, rec) = a.coach_step(&[0.2], Some(&Feedback::new(vec![1]).unwrap())).unwrap();
        assert_eq!(rec.learning_rate.unwrap(), vec![0.05]);
        for (t, f) in a.theta()[0].iter().zip(&phi) {
            assert!((t - 0.05 * 0.5 * f).abs() < 1e-15);
        }
        let norm2: f64 = phi.iter().map(|f| f * f).sum();
        let (_, rec) = a.coach_step(&[0.2], Some(&Feedback::new(vec![1]).unwrap())).unwrap();
        assert!((rec.learning_rate.unwrap()[0] - (0.3 * norm2 + 0.05)).abs() < 1e-15);
    }

    #[test]
    fn no_feedback_changes_nothing() {
        let mut a = agent(line());
        a.coach_step(&[0.2], None).unwrap();
        a.coach_step(&[0.2], Some(&Feedback::zeros(1))).unwrap();
        assert!(a.theta()[0].iter().chain(&a.psi()[0]).all(|w| *w == 0.0));
    }
}
