use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, KernelSpec, ScalingMatrix};

/// Per-dimension actuator limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionBounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return Err(Error::usage("action bounds need matching, non-empty low/high vectors"));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::usage("action bounds must be finite with low <= high"));
        }
        Ok(ActionBounds { low, high })
    }

    pub fn symmetric(limit: f64, dim: usize) -> Self {
        ActionBounds { low: vec![-limit; dim], high: vec![limit; dim] }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn clamp(&self, a: &[f64]) -> Vec<f64> {
        a.iter().zip(&self.low).zip(&self.high).map(|((v, l), h)| v.clamp(*l, *h)).collect()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.iter().zip(&self.low).zip(&self.high).all(|((v, l), h)| v >= l && v <= h)
    }
}

/// Replacement threshold on the policy's predictive std.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsificationConfig {
    pub threshold: f64,
}

impl SparsificationConfig {
    /// Half the policy kernel's signal standard deviation.
    pub fn for_kernel(kernel: &KernelSpec) -> Self {
        SparsificationConfig { threshold: 0.5 * kernel.signal_std() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    /// Executed (clamped) action.
    pub action: Vec<f64>,
    /// Unclamped posterior mean.
    pub mean: Vec<f64>,
    /// Posterior std per action dimension, before clamping.
    pub std: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreOutcome {
    Appended,
    Replaced(usize),
}

/// GP policy `S -> R^D` sharing one state dictionary across action dimensions.
#[derive(Clone, Debug)]
pub struct PolicyModel {
    gp: GpModel,
    bounds: ActionBounds,
}

impl PolicyModel {
    pub fn new(kernel: KernelSpec, scaling: ScalingMatrix, bounds: ActionBounds) -> Result<Self> {
        let gp = GpModel::new(kernel, scaling, bounds.dim())?;
        Ok(PolicyModel { gp, bounds })
    }

    pub(crate) fn from_parts(gp: GpModel, bounds: ActionBounds) -> Result<Self> {
        if gp.output_dim() != bounds.dim() {
            return Err(Error::usage("policy outputs do not match action bounds"));
        }
        Ok(PolicyModel { gp, bounds })
    }

    pub fn gp(&self) -> &GpModel {
        &self.gp
    }

    pub fn bounds(&self) -> &ActionBounds {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.gp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gp.is_empty()
    }

    pub fn act(&self, state: &[f64]) -> Result<PolicyOutput> {
        let p = self.gp.predict(state)?;
        Ok(PolicyOutput { action: self.bounds.clamp(&p.mean), std: vec![p.std; p.mean.len()], mean: p.mean })
    }

    /// Stores `(state, action)` either by overwriting the most covariant
    /// entry (when the policy was already confident at `state`) or by
    /// appending. `std` must be the value reported by [`act`](Self::act) at
    /// the same state within the same step.
    pub fn sparsify_and_store(
        &mut self,
        state: &[f64],
        action: &[f64],
        std: &[f64],
        cfg: SparsificationConfig,
    ) -> Result<StoreOutcome> {
        let mean_std = std.iter().sum::<f64>() / std.len().max(1) as f64;
        if !self.gp.is_empty() && mean_std < cfg.threshold {
            let index = self.gp.max_covariance_index(state)?;
            self.gp.replace(index, state, action)?;
            Ok(StoreOutcome::Replaced(index))
        } else {
            self.gp.append(state, action)?;
            Ok(StoreOutcome::Appended)
        }
    }

    pub fn update_normalized_scaling(&mut self) -> Result<()> {
        self.gp.update_normalized_scaling().map(|_| ())
    }
}


#[cfg(test)]
impl PolicyModel {
    pub(crate) fn gp_mut_for_tests(&mut self) -> &mut GpModel {
        &mut self.gp
    }
}
