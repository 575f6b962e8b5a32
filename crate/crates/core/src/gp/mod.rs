//! Exact Gaussian-process regression: kernels, ARD scaling, dictionaries and
//! the factorized posterior.

mod dictionary;
mod kernel;
mod model;
mod scaling;

pub use dictionary::Dictionary;
pub use kernel::{kernel_eval, KernelKind, KernelSpec, Smoothness};
pub use model::{Eviction, GpModel, Prediction};
pub use scaling::{ScalingMatrix, ScalingMode, DEFAULT_SCALE_FLOOR};
