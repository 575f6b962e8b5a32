//! Exact GP regression over a mutable dictionary.
//!
//! The Gram factor of `K + σ_n² I` is stored as a packed lower triangle
//! (row `i` holds `i + 1` entries) so appends extend it by one row in
//! O(n²) without touching the existing rows. Replacements and scaling
//! changes trigger a full refactorization.

use super::dictionary::Dictionary;
use super::kernel::{scaled_sq_dist, KernelSpec};
use super::scaling::{ScalingMatrix, ScalingMode};
use crate::error::{Error, Result};

/// Jitter ladder, in units of the signal variance: 0, then 1e-10 up to 1e-6.
const JITTER_START: f64 = 1e-10;
const JITTER_STOP: f64 = 1e-6;

/// What `append` does when the dictionary is at capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eviction {
    /// Refuse with a capacity error.
    Reject,
    /// Drop the oldest pair.
    Fifo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Posterior mean per output dimension.
    pub mean: Vec<f64>,
    /// Posterior standard deviation, shared by all outputs.
    pub std: f64,
}

#[derive(Clone, Debug)]
struct Factor {
    rows: Vec<Vec<f64>>,
    /// `(K + σ_n² I)^-1 Y`, row-major n × D.
    alpha: Vec<f64>,
    jitter: f64,
}

#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: KernelSpec,
    scaling: ScalingMatrix,
    dict: Dictionary,
    eviction: Eviction,
    inv_len: Vec<f64>,
    factor: Option<Factor>,
}

impl GpModel {
    pub fn new(kernel: KernelSpec, scaling: ScalingMatrix, output_dim: usize) -> Result<Self> {
        kernel.validate()?;
        if scaling.dim() != kernel.dim() {
            return Err(Error::usage(format!(
                "scaling has {} dimensions but kernel has {}",
                scaling.dim(),
                kernel.dim()
            )));
        }
        if output_dim == 0 {
            return Err(Error::usage("a GP needs at least one output dimension"));
        }
        let inv_len = kernel.inverse_lengths(&scaling);
        let dict = Dictionary::new(kernel.dim(), output_dim);
        Ok(GpModel { kernel, scaling, dict, eviction: Eviction::Reject, inv_len, factor: None })
    }

    /// Bounds the dictionary size.
    pub fn with_capacity(mut self, capacity: usize, eviction: Eviction) -> Self {
        self.dict = self.dict.with_capacity_limit(capacity);
        self.eviction = eviction;
        self
    }

    /// Builds a model from an existing dictionary and fits it.
    pub fn from_dictionary(kernel: KernelSpec, scaling: ScalingMatrix, dict: Dictionary) -> Result<Self> {
        if dict.input_dim() != kernel.dim() {
            return Err(Error::usage("dictionary input dimension does not match kernel"));
        }
        let mut model = GpModel::new(kernel, scaling, dict.output_dim())?;
        model.dict = dict;
        model.fit()?;
        Ok(model)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn scaling(&self) -> &ScalingMatrix {
        &self.scaling
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn len(&self) -> usize {
        self.dict.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dict.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.dict.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.dict.output_dim()
    }

    /// Diagonal jitter used by the current factorization.
    pub fn jitter(&self) -> f64 {
        self.factor.as_ref().map_or(0.0, |f| f.jitter)
    }

    /// Lower Cholesky factor of `K + (σ_n² + jitter) I` as a dense row-major matrix.
    pub fn cholesky_factor(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        match &self.factor {
            None => Vec::new(),
            Some(f) => f
                .rows
                .iter()
                .map(|r| {
                    let mut row = r.clone();
                    row.resize(n, 0.0);
                    row
                })
                .collect(),
        }
    }

    /// Kernel value between two inputs under the model's current scaling.
    pub fn covariance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.kernel.covariance_with(&self.inv_len, x, y)
    }

    /// Full refactorization from the dictionary.
    pub fn fit(&mut self) -> Result<()> {
        self.inv_len = self.kernel.inverse_lengths(&self.scaling);
        let n = self.dict.len();
        if n == 0 {
            self.factor = None;
            return Ok(());
        }
        let noise = self.kernel.noise_variance();
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let xi = self.dict.input(i);
                (0..=i)
                    .map(|j| {
                        let k = self.covariance(xi, self.dict.input(j));
                        if i == j {
                            k + noise
                        } else {
                            k
                        }
                    })
                    .collect()
            })
            .collect();

        let s2 = self.kernel.signal_variance;
        let mut jitter = 0.0;
        loop {
            if let Some(rows) = cholesky_packed(&gram, jitter) {
                let alpha = solve_alpha(&rows, &self.dict);
                self.factor = Some(Factor { rows, alpha, jitter });
                return Ok(());
            }
            jitter = if jitter == 0.0 { JITTER_START * s2 } else { jitter * 10.0 };
            if jitter > JITTER_STOP * s2 * (1.0 + 1e-9) {
                self.factor = None;
                return Err(Error::Numerical {
                    detail: format!("Gram matrix of {n} points is not positive definite"),
                    jitter: JITTER_STOP * s2,
                });
            }
        }
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::usage(format!(
                "query has dimension {} but model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite query"));
        }
        Ok(())
    }

    fn cross_covariances(&self, x: &[f64]) -> Vec<f64> {
        self.dict.inputs().map(|xi| self.covariance(xi, x)).collect()
    }

    /// Posterior mean per output and the shared posterior standard deviation.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_query(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Prediction {
        let prior = self.kernel.signal_variance;
        let d_out = self.output_dim();
        let Some(f) = &self.factor else {
            return Prediction { mean: vec![0.0; d_out], std: prior.sqrt() };
        };
        let k = self.cross_covariances(x);
        let mut mean = vec![0.0; d_out];
        for (ki, a) in k.iter().zip(f.alpha.chunks_exact(d_out)) {
            for (m, aj) in mean.iter_mut().zip(a) {
                *m += ki * aj;
            }
        }
        let v = forward_sub(&f.rows, k);
        let var = prior - v.iter().map(|t| t * t).sum::<f64>();
        Prediction { mean, std: var.max(0.0).sqrt() }
    }

    /// Posterior standard deviation only.
    pub fn predict_std(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        let prior = self.kernel.signal_variance;
        let Some(f) = &self.factor else {
            return Ok(prior.sqrt());
        };
        let v = forward_sub(&f.rows, self.cross_covariances(x));
        Ok((prior - v.iter().map(|t| t * t).sum::<f64>()).max(0.0).sqrt())
    }

    /// Appends a pair and extends the factor by one row.
    pub fn append(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        self.dict.check_pair(x, y)?;
        if let Some(cap) = self.dict.capacity() {
            if self.dict.len() >= cap {
                match self.eviction {
                    Eviction::Reject => {
                        return Err(Error::Capacity { capacity: cap, policy: "fifo or replace-by-max-covariance" })
                    }
                    Eviction::Fifo => {
                        self.dict.pop_front();
                        self.dict.push(x, y)?;
                        return self.fit();
                    }
                }
            }
        }
        let Some(f) = self.factor.as_mut() else {
            self.dict.push(x, y)?;
            return self.fit();
        };
        let k: Vec<f64> = self.dict.inputs().map(|xi| self.kernel.covariance_with(&self.inv_len, xi, x)).collect();
        let v = forward_sub(&f.rows, k);
        let d2 = self.kernel.signal_variance + self.kernel.noise_variance() + f.jitter
            - v.iter().map(|t| t * t).sum::<f64>();
        self.dict.push(x, y)?;
        if d2 > 0.0 && d2.is_finite() {
            let mut row = v;
            row.push(d2.sqrt());
            f.rows.push(row);
            f.alpha = solve_alpha(&f.rows, &self.dict);
            Ok(())
        } else {
            self.fit()
        }
    }

    /// Overwrites the pair at `index` and refactorizes.
    pub fn replace(&mut self, index: usize, x: &[f64], y: &[f64]) -> Result<()> {
        self.dict.set(index, x, y)?;
        self.fit()
    }

    /// Index of the stored input with the largest covariance to `x`, i.e.
    /// the smallest scaled distance. Ties go to the lowest index.
    pub fn max_covariance_index(&self, x: &[f64]) -> Result<usize> {
        self.check_query(x)?;
        if self.is_empty() {
            return Err(Error::usage("max-covariance lookup on an empty dictionary"));
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, xi) in self.dict.inputs().enumerate() {
            let d = scaled_sq_dist(&self.inv_len, xi, x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    /// Recomputes normalized scaling from the dictionary and refits when it
    /// changed. A no-op in custom-static mode.
    pub fn update_normalized_scaling(&mut self) -> Result<&ScalingMatrix> {
        if self.scaling.mode() == ScalingMode::NormalizedOnline && self.scaling.renormalize(self.dict.inputs()) {
            self.fit()?;
        }
        Ok(&self.scaling)
    }

    /// Swaps the scaling matrix and refits.
    pub fn set_scaling(&mut self, scaling: ScalingMatrix) -> Result<()> {
        if scaling.dim() != self.kernel.dim() {
            return Err(Error::usage("scaling dimension does not match kernel"));
        }
        self.scaling = scaling;
        self.fit()
    }
}

fn cholesky_packed(gram: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let n = gram.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(i + 1);
        for j in 0..i {
            let rj = &rows[j];
            let dot: f64 = row.iter().zip(rj.iter()).map(|(a, b)| a * b).sum();
            row.push((gram[i][j] - dot) / rj[j]);
        }
        let d2 = gram[i][i] + jitter - row.iter().map(|t| t * t).sum::<f64>();
        if !(d2 > 0.0 && d2.is_finite()) {
            return None;
        }
        row.push(d2.sqrt());
        rows.push(row);
    }
    Some(rows)
}

/// Solves `L v = b` in place.
fn forward_sub(rows: &[Vec<f64>], mut b: Vec<f64>) -> Vec<f64> {
    for (i, row) in rows.iter().enumerate() {
        let dot: f64 = row[..i].iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
        b[i] = (b[i] - dot) / row[i];
    }
    b
}

/// Solves `L^T x = b` in place.
fn backward_sub(rows: &[Vec<f64>], mut b: Vec<f64>) -> Vec<f64> {
    for i in (0..rows.len()).rev() {
        let row = &rows[i];
        b[i] /= row[i];
        let xi = b[i];
        for (bj, lij) in b[..i].iter_mut().zip(&row[..i]) {
            *bj -= lij * xi;
        }
    }
    b
}

fn solve_alpha(rows: &[Vec<f64>], dict: &Dictionary) -> Vec<f64> {
    let n = dict.len();
    let d_out = dict.output_dim();
    let mut alpha = vec![0.0; n * d_out];
    for j in 0..d_out {
        let y: Vec<f64> = dict.targets().map(|t| t[j]).collect();
        let col = backward_sub(rows, forward_sub(rows, y));
        for (i, v) in col.into_iter().enumerate() {
            alpha[i * d_out + j] = v;
        }
    }
    alpha
}
