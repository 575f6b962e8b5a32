//! The two function models of the GP learner: the policy over states and
//! the human-feedback model over state-action pairs.

mod human;
mod policy;
mod snapshot;

pub use human::HumanModel;
pub use policy::{ActionBounds, PolicyModel, PolicyOutput, SparsificationConfig, StoreOutcome};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_VERSION};
