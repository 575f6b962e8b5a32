//! Policy learning from corrective human feedback.
//!
//! The crate hosts the exact-GP learner with its adaptive learning rate,
//! active-learning signal and policy sparsification, the RBF-network COACH
//! baseline, three benchmark environments with reference controllers, a
//! simulated teacher, the batch experiment harness and the session logic
//! behind the live teaching service.

pub mod error;
pub mod gp;

pub use error::{Error, Result};
pub mod feedback;
pub mod models;

pub use feedback::Feedback;
pub mod agent;
pub use agent::{GpcAgent, GpcConfig, LearningRateMode, StepRecord};
pub mod coach;
pub use coach::{CoachAgent, CoachConfig, RbfFeatureSpace};
pub mod env;
pub mod oracle;
pub use env::{EnvKind, Environment};
pub use oracle::{Oracle, OracleConfig};
pub mod harness;
pub mod teach;
