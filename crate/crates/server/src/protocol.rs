//! Wire messages. Every message is one JSON object with a `type` tag and a
//! per-connection `seq`; the TCP endpoint frames them one per line, the
//! WebSocket endpoint one per text frame. `schema/protocol-v1.json` is the
//! normative schema.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::safety::RejectReason;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Commander,
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirePose {
    pub position: [f64; 3],
    pub orientation_wxyz: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientBody {
    Hello {
        schema_version: u32,
        role: Role,
    },
    Configure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        camera_frame: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        camera_pose: Option<WirePose>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stream_rate_hz: Option<f64>,
    },
    CommandCartesian {
        v_tip: [f64; 3],
        omega_roll: f64,
    },
    CommandSpherical {
        omega_pitch: f64,
        omega_yaw: f64,
        omega_roll: f64,
        v_trans: f64,
    },
    Clutch {
        engaged: bool,
    },
    StartRecording {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
    StopRecording,
    /// Advance the loop by `ticks` control periods (test mode only).
    Step {
        ticks: u64,
    },
}

pub const CLIENT_TYPES: [&str; 8] = [
    "hello",
    "configure",
    "command_cartesian",
    "command_spherical",
    "clutch",
    "start_recording",
    "stop_recording",
    "step",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireTwist {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSnapshot {
    pub tick: u64,
    pub time: f64,
    pub flange_position: [f64; 3],
    pub flange_orientation: [f64; 4],
    pub tip: [f64; 3],
    pub p_rcm: [f64; 3],
    pub twist: WireTwist,
    pub mode: String,
    pub clutch: bool,
    pub recording: bool,
    pub deviation_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServerBody {
    Hello {
        schema_version: u32,
        role: Role,
        dt: f64,
        test_mode: bool,
        stream_rate_hz: f64,
        config_hash: String,
    },
    State(StateSnapshot),
    Verdict {
        ref_seq: u64,
        accepted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<RejectReason>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    Ack {
        ref_seq: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tick: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_seq: Option<u64>,
        code: ErrorCode,
        message: String,
    },
}

pub const SERVER_TYPES: [&str; 5] = ["hello", "state", "verdict", "ack", "error"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadJson,
    UnknownType,
    BadMessage,
    BadSeq,
    SchemaVersion,
    NotIdentified,
    AlreadyIdentified,
    Busy,
    NotCommander,
    ClutchDisengaged,
    NotTestMode,
    Recording,
}

/// A message with its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<B> {
    pub seq: u64,
    pub body: B,
}

fn encode<B: Serialize>(seq: u64, body: &B) -> String {
    let mut value = serde_json::to_value(body).expect("wire bodies serialize");
    let obj = value.as_object_mut().expect("wire bodies are objects");
    let mut out = Map::with_capacity(obj.len() + 1);
    out.insert("type".into(), obj.remove("type").unwrap_or(Value::Null));
    out.insert("seq".into(), Value::from(seq));
    out.extend(std::mem::take(obj));
    Value::Object(out).to_string()
}

pub fn encode_server(seq: u64, body: &ServerBody) -> String {
    encode(seq, body)
}

pub fn encode_client(seq: u64, body: &ClientBody) -> String {
    encode(seq, body)
}

/// Why an incoming text could not be turned into a message.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeError {
    /// `seq` when it could be read, for correlating the error reply.
    pub seq: Option<u64>,
    pub code: ErrorCode,
    pub message: String,
}

fn split_envelope(text: &str, known: &[&str]) -> Result<(u64, Value), DecodeError> {
    let fail = |seq, code, message: String| DecodeError { seq, code, message };
    let mut value: Value = serde_json::from_str(text).map_err(|e| fail(None, ErrorCode::BadJson, e.to_string()))?;
    let Some(obj) = value.as_object_mut() else {
        return Err(fail(None, ErrorCode::BadJson, "message must be a JSON object".into()));
    };
    let seq = match obj.remove("seq") {
        Some(v) => v.as_u64(),
        None => None,
    };
    let Some(seq) = seq else {
        return Err(fail(None, ErrorCode::BadSeq, "`seq` must be a non-negative integer".into()));
    };
    match obj.get("type").and_then(Value::as_str) {
        Some(t) if known.contains(&t) => Ok((seq, value)),
        Some(t) => Err(fail(Some(seq), ErrorCode::UnknownType, format!("unknown message type `{t}`"))),
        None => Err(fail(Some(seq), ErrorCode::BadMessage, "missing string field `type`".into())),
    }
}

pub fn decode_client(text: &str) -> Result<Envelope<ClientBody>, DecodeError> {
    let (seq, value) = split_envelope(text, &CLIENT_TYPES)?;
    let body = serde_json::from_value(value).map_err(|e| DecodeError {
        seq: Some(seq),
        code: ErrorCode::BadMessage,
        message: e.to_string(),
    })?;
    Ok(Envelope { seq, body })
}

pub fn decode_server(text: &str) -> Result<Envelope<ServerBody>, DecodeError> {
    let (seq, value) = split_envelope(text, &SERVER_TYPES)?;
    let body = serde_json::from_value(value).map_err(|e| DecodeError {
        seq: Some(seq),
        code: ErrorCode::BadMessage,
        message: e.to_string(),
    })?;
    Ok(Envelope { seq, body })
}
