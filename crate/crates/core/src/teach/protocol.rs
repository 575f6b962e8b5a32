//! Wire messages of the live-teaching protocol.
//!
//! Every frame is one JSON object tagged by `"type"`. The client opens with
//! a `handshake`; the server answers with its own `handshake` carrying the
//! effective session configuration and then streams `state_update`s.

use serde::{Deserialize, Serialize};

use super::session::{SessionConfig, SessionStats};
use crate::env::Shape;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Handshake {
        protocol_version: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_config: Option<SessionConfig>,
    },
    StateUpdate(StateUpdate),
    /// Raw integers so out-of-range values can be rejected with an error
    /// rather than a parse failure.
    Feedback {
        dims: Vec<i64>,
    },
    Control(Control),
    Ack {
        code: AckCode,
        detail: String,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Control {
    Pause,
    Resume,
    Reset,
    /// Advance exactly one tick; only valid while paused.
    Step,
    SetRate {
        steps_per_second: f64,
    },
    EndSession,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckCode {
    Handshake,
    FeedbackQueued,
    /// Accepted but discarded (e.g. during the end-of-episode interlude).
    FeedbackDropped,
    Control,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownType,
    /// A server-to-client message type sent by the client.
    UnexpectedType,
    HandshakeRequired,
    ProtocolVersion,
    InvalidFeedback,
    InvalidControl,
    InvalidConfig,
    SessionEnded,
    Internal,
}

/// One simulation tick as seen by the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub session: String,
    pub episode: u32,
    pub step: u32,
    pub observation: Vec<f64>,
    /// Executed action (agent units) that led to `observation`; empty on
    /// the first frame of an episode.
    pub action: Vec<f64>,
    pub reward: f64,
    pub episode_return: f64,
    pub done: bool,
    pub paused: bool,
    pub shapes: Vec<Shape>,
    /// Learning rate applied this tick, if feedback was consumed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<Vec<f64>>,
    pub stats: SessionStats,
}

/// Known message tags, for telling unknown types from malformed bodies.
const KNOWN_TYPES: [&str; 6] = ["handshake", "state_update", "feedback", "control", "ack", "error"];

/// Parses a text frame, classifying failures.
pub fn parse_message(text: &str) -> Result<WireMessage, (ErrorCode, String)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| (ErrorCode::Malformed, format!("not a JSON object: {e}")))?;
    let tag = value
        .get("type")
        .and_then(|t| t.as_str())
        .map(str::to_owned)
        .ok_or_else(|| (ErrorCode::Malformed, "message has no string \"type\" field".to_string()))?;
    let tag = tag.as_str();
    if !KNOWN_TYPES.contains(&tag) {
        return Err((ErrorCode::UnknownType, format!("unknown message type '{tag}'")));
    }
    if matches!(tag, "state_update" | "ack" | "error") {
        return Err((ErrorCode::UnexpectedType, format!("'{tag}' is sent by the server only")));
    }
    let code = match tag {
        "control" => ErrorCode::InvalidControl,
        "feedback" => ErrorCode::InvalidFeedback,
        "handshake" => ErrorCode::InvalidConfig,
        _ => ErrorCode::Malformed,
    };
    serde_json::from_value(value).map_err(|e| (code, format!("invalid '{tag}' message: {e}")))
}

pub fn to_text(msg: &WireMessage) -> String {
    serde_json::to_string(msg).expect("wire messages serialize")
}
