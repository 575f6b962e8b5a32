//! Stationary covariance functions with per-axis length-scales.

use serde::{Deserialize, Serialize};

use super::scaling::ScalingMatrix;
use crate::error::{Error, Result};

/// Closed-form Matérn smoothness orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Smoothness {
    pub fn from_nu(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(Smoothness::Half)
        } else if nu == 1.5 {
            Ok(Smoothness::ThreeHalves)
        } else if nu == 2.5 {
            Ok(Smoothness::FiveHalves)
        } else {
            Err(Error::usage(format!("Matérn smoothness {nu} has no closed form; use 0.5, 1.5 or 2.5")))
        }
    }

    pub fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }
}

impl TryFrom<f64> for Smoothness {
    type Error = Error;
    fn try_from(nu: f64) -> Result<Self> {
        Smoothness::from_nu(nu)
    }
}

impl From<Smoothness> for f64 {
    fn from(s: Smoothness) -> f64 {
        s.nu()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    SquaredExponential,
    Matern { nu: Smoothness },
}

/// Kernel family plus hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub signal_variance: f64,
    /// One base length-scale per input dimension.
    pub length_scales: Vec<f64>,
    pub noise_std: f64,
}

impl KernelSpec {
    pub fn squared_exponential(signal_std: f64, length_scale: f64, dim: usize, noise_std: f64) -> Self {
        KernelSpec {
            kind: KernelKind::SquaredExponential,
            signal_variance: signal_std * signal_std,
            length_scales: vec![length_scale; dim],
            noise_std,
        }
    }

    pub fn matern(nu: Smoothness, signal_std: f64, length_scale: f64, dim: usize, noise_std: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Matern { nu },
            signal_variance: signal_std * signal_std,
            length_scales: vec![length_scale; dim],
            noise_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn signal_std(&self) -> f64 {
        self.signal_variance.sqrt()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            problems.push(format!("signal variance must be positive, got {}", self.signal_variance));
        }
        if self.length_scales.is_empty() {
            problems.push("kernel needs at least one length-scale".to_string());
        }
        if let Some(l) = self.length_scales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            problems.push(format!("length-scales must be positive, got {l}"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            problems.push(format!("noise std must be non-negative, got {}", self.noise_std));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Correlation as a function of the squared scaled distance; `rho(0) == 1`.
    #[inline]
    pub fn correlation(&self, r2: f64) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential => (-0.5 * r2).exp(),
            KernelKind::Matern { nu } => {
                let r = r2.sqrt();
                match nu {
                    Smoothness::Half => (-r).exp(),
                    Smoothness::ThreeHalves => {
                        let a = 3f64.sqrt() * r;
                        (1.0 + a) * (-a).exp()
                    }
                    Smoothness::FiveHalves => {
                        let a = 5f64.sqrt() * r;
                        (1.0 + a + a * a / 3.0) * (-a).exp()
                    }
                }
            }
        }
    }

    /// Inverse effective length-scales under `scaling`, floored so every
    /// effective length-scale is at least the scaling floor.
    pub fn inverse_lengths(&self, scaling: &ScalingMatrix) -> Vec<f64> {
        self.length_scales.iter().zip(scaling.values()).map(|(l, v)| 1.0 / (l * v).max(scaling.floor())).collect()
    }

    #[inline]
    pub(crate) fn covariance_with(&self, inv_len: &[f64], x: &[f64], y: &[f64]) -> f64 {
        self.signal_variance * self.correlation(scaled_sq_dist(inv_len, x, y))
    }
}

#[inline]
pub(crate) fn scaled_sq_dist(inv_len: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((a, b), s) in x.iter().zip(y).zip(inv_len) {
        let t = (a - b) * s;
        acc += t * t;
    }
    acc
}

/// Checked kernel evaluation `k(x, x')` under the given scaling.
pub fn kernel_eval(spec: &KernelSpec, scaling: &ScalingMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = spec.dim();
    if x.len() != d || y.len() != d || scaling.values().len() != d {
        return Err(Error::usage(format!(
            "dimension mismatch: kernel {d}, scaling {}, inputs {} and {}",
            scaling.values().len(),
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::usage("non-finite kernel input"));
    }
    Ok(spec.covariance_with(&spec.inverse_lengths(scaling), x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> ScalingMatrix {
        ScalingMatrix::custom(vec![1.0; d]).unwrap()
    }

    #[test]
    fn se_at_zero_distance_is_signal_variance() {
        let k = KernelSpec::squared_exponential(0.7, 0.1, 4, 0.0);
        let x = [0.3, -1.0, 2.0, 0.5];
        let v = kernel_eval(&k, &unit(4), &x, &x).unwrap();
        assert_eq!(v, k.signal_variance);
    }

    #[test]
    fn matern_half_is_exponential() {
        let k = KernelSpec::matern(Smoothness::Half, 1.0, 1.0, 1, 0.0);
        let v = kernel_eval(&k, &unit(1), &[0.0], &[1.0]).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn pendulum_human_kernel_value() {
        // sigma^2 = 0.7, l = 0.1, offset of one length-scale along the first axis
        let mut k = KernelSpec::squared_exponential(1.0, 0.1, 4, 0.0);
        k.signal_variance = 0.7;
        let x = [0.1, 0.0, 0.0, 0.0];
        let y = [0.0; 4];
        let v = kernel_eval(&k, &unit(4), &x, &y).unwrap();
        assert!((v - 0.7 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.4246).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_smoothness_and_dims() {
        assert!(Smoothness::from_nu(1.0).is_err());
        let k = KernelSpec::squared_exponential(1.0, 1.0, 2, 0.0);
        assert!(kernel_eval(&k, &unit(2), &[0.0], &[0.0, 1.0]).is_err());
        assert!(kernel_eval(&k, &unit(2), &[0.0, f64::NAN], &[0.0, 1.0]).is_err());
    }
}
