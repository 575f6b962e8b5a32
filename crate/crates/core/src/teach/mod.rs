//! Live teaching: the session loop and its wire protocol. The network
//! transport lives in the command-line crate.

pub mod protocol;
pub mod session;

pub use protocol::{parse_message, to_text, AckCode, Control, ErrorCode, StateUpdate, WireMessage, PROTOCOL_VERSION};
pub use session::{ControlEffect, DropReason, FeedbackOutcome, Session, SessionConfig, SessionStats, TickOutput};
