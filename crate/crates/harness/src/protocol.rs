//! Newline-delimited JSON messages between the waiter client and the service.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use hybs_core::{RecommendationEntry, WaiterObservation};

use crate::frames::{Frame, RenderState};

pub mod types {
    pub const CREATE_SESSION: &str = "create_session";
    pub const SUBMIT_RECOMMENDATIONS: &str = "submit_recommendations";
    pub const END_SESSION: &str = "end_session";

    pub const SESSION_CREATED: &str = "session_created";
    pub const STATE_SNAPSHOT: &str = "state_snapshot";
    pub const ACK: &str = "ack";
    pub const CHEF_TURN_RESULT: &str = "chef_turn_result";
    pub const GAME_OVER: &str = "game_over";
    pub const SESSION_CLOSED: &str = "session_closed";
    pub const ERROR: &str = "error";
}

pub mod codes {
    pub const PROTOCOL_VIOLATION: &str = "PROTOCOL_VIOLATION";
    pub const INVALID_RECOMMENDATION: &str = "INVALID_RECOMMENDATION";
    pub const ENGINE_ERROR: &str = "ENGINE_ERROR";
}

/// Every message on the wire. Unknown fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub session_id: Option<String>,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Envelope {
    pub fn new(kind: &str, session_id: Option<&str>, seq: u64, payload: impl Serialize) -> Envelope {
        Envelope {
            kind: kind.to_string(),
            session_id: session_id.map(str::to_string),
            seq,
            payload: serde_json::to_value(payload).expect("payloads serialize"),
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("envelopes serialize");
        s.push('\n');
        s
    }

    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, serde_json::Error> {
        serde_json::from_value(self.payload.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    /// Scenario seed; the service default when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRecommendations {
    pub entries: Vec<RecommendationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub seed: u64,
    /// Kitchen layout in its text form.
    pub layout: String,
    pub prep_budget: u32,
    pub chef_budget: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub observation: WaiterObservation,
    pub tips_total: u32,
    pub round_tips: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub ack_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub tips_total: u32,
    pub round_tips: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChefTurnResult {
    pub round: u8,
    pub initial: RenderState,
    /// One render state per chef action, in order.
    pub frames: Vec<Frame>,
    /// Tips earned during this round.
    pub round_tips: u32,
    pub totals: Totals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOver {
    pub tips_total: u32,
    pub normalized_tip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub detail: String,
}
