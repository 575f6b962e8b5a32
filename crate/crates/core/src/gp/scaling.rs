//! Per-axis input scaling (the diagonal relevance matrix).
//!
//! Effective length-scale along axis `d` is `base_length[d] * values[d]`.
//! In custom-static mode the values are user weights fixed for the whole
//! session; in normalized-online mode they track the population standard
//! deviation of the dictionary inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SCALE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    CustomStatic,
    NormalizedOnline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingMatrix {
    mode: ScalingMode,
    values: Vec<f64>,
    floor: f64,
}

impl ScalingMatrix {
    /// Static user weights.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::usage(format!("scaling weights must be positive, got {w}")));
        }
        Ok(ScalingMatrix { mode: ScalingMode::CustomStatic, values: weights, floor: DEFAULT_SCALE_FLOOR })
    }

    /// Online normalization; starts at the floor until data arrives.
    pub fn normalized(dim: usize) -> Self {
        ScalingMatrix {
            mode: ScalingMode::NormalizedOnline,
            values: vec![DEFAULT_SCALE_FLOOR; dim],
            floor: DEFAULT_SCALE_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        assert!(floor > 0.0, "scale floor must be positive");
        self.floor = floor;
        for v in &mut self.values {
            *v = v.max(floor);
        }
        self
    }

    pub fn mode(&self) -> ScalingMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Recompute the values as floored population standard deviations of
    /// `rows` (each of length `dim`). Returns whether anything changed.
    pub(crate) fn renormalize<'a>(&mut self, rows: impl Iterator<Item = &'a [f64]> + Clone) -> bool {
        let dim = self.values.len();
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        for r in rows.clone() {
            n += 1;
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let mut var = vec![0.0; dim];
        if n > 0 {
            for m in &mut mean {
                *m /= n as f64;
            }
            for r in rows {
                for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
                    let t = v - m;
                    *acc += t * t;
                }
            }
        }
        let mut changed = false;
        for (value, acc) in self.values.iter_mut().zip(var) {
            let s = if n > 1 { (acc / n as f64).sqrt().max(self.floor) } else { self.floor };
            if s != *value {
                *value = s;
                changed = true;
            }
        }
        changed
    }
}
