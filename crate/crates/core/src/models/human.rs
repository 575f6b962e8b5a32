use crate::error::{Error, Result};
use crate::feedback::Feedback;
use crate::gp::{Eviction, GpModel, KernelSpec, ScalingMatrix};

/// Feedback model `S x A -> [-1, 1]^D`.
///
/// Each action dimension has its own GP over the concatenated state-action
/// input, holding only the events where that dimension received non-zero
/// advice.
#[derive(Clone, Debug)]
pub struct HumanModel {
    gps: Vec<GpModel>,
    events: usize,
}

impl HumanModel {
    pub fn new(kernel: KernelSpec, scaling: ScalingMatrix, action_dim: usize, capacity: Option<usize>) -> Result<Self> {
        let gps = (0..action_dim)
            .map(|_| {
                let gp = GpModel::new(kernel.clone(), scaling.clone(), 1)?;
                Ok(match capacity {
                    Some(c) => gp.with_capacity(c, Eviction::Fifo),
                    None => gp,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HumanModel { gps, events: 0 })
    }

    pub(crate) fn from_parts(gps: Vec<GpModel>, events: usize) -> Self {
        HumanModel { gps, events }
    }

    pub fn gps(&self) -> &[GpModel] {
        &self.gps
    }

    pub fn action_dim(&self) -> usize {
        self.gps.len()
    }

    /// Number of feedback events stored (each event counted once).
    pub fn events(&self) -> usize {
        self.events
    }

    /// Stored pairs per action dimension.
    pub fn sizes(&self) -> Vec<usize> {
        self.gps.iter().map(GpModel::len).collect()
    }

    /// Posterior mean (clipped to [-1, 1]) and std per action dimension.
    pub fn estimate(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut means = Vec::with_capacity(self.gps.len());
        let mut stds = Vec::with_capacity(self.gps.len());
        for gp in &self.gps {
            let p = gp.predict(z)?;
            means.push(p.mean[0].clamp(-1.0, 1.0));
            stds.push(p.std);
        }
        Ok((means, stds))
    }

    /// Posterior std only; cheaper than [`estimate`](Self::estimate) when
    /// the mean is not needed.
    pub fn uncertainty(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.gps.iter().map(|gp| gp.predict_std(z)).collect()
    }

    pub fn store(&mut self, z: &[f64], h: &Feedback) -> Result<()> {
        if h.len() != self.gps.len() {
            return Err(Error::usage(format!(
                "feedback has {} dimensions, human model has {}",
                h.len(),
                self.gps.len()
            )));
        }
        for (gp, &v) in self.gps.iter_mut().zip(h.dims()) {
            if v != 0 {
                gp.append(z, &[f64::from(v)])?;
            }
        }
        if !h.is_zero() {
            self.events += 1;
        }
        Ok(())
    }

    pub fn update_normalized_scaling(&mut self) -> Result<()> {
        for gp in &mut self.gps {
            gp.update_normalized_scaling()?;
        }
        Ok(())
    }
}
