use serde::{Deserialize, Serialize};
use tinysv::pipeline::{Mode, PipelineEvent};

/// Largest accepted audio chunk in bytes.
pub const MAX_CHUNK_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum ClientMessage {
    /// Raw little-endian 16-bit PCM.
    AudioChunk(Vec<u8>),
    SetThreshold(f32),
    ResetEnrollment,
    GetStatus,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Control {
    SetThreshold { value: f32 },
    ResetEnrollment,
    GetStatus,
    AudioChunk {},
}

/// Parses a JSON control frame.
pub fn parse_control(text: &str) -> Result<ClientMessage, String> {
    match serde_json::from_str::<Control>(text).map_err(|e| format!("bad control message: {e}"))? {
        Control::SetThreshold { value } => Ok(ClientMessage::SetThreshold(value)),
        Control::ResetEnrollment => Ok(ClientMessage::ResetEnrollment),
        Control::GetStatus => Ok(ClientMessage::GetStatus),
        Control::AudioChunk {} => Err("audio chunks travel as binary frames".into()),
    }
}

/// Decodes a PCM payload, refusing odd lengths and oversized chunks.
pub fn decode_pcm(bytes: &[u8]) -> Result<Vec<i16>, String> {
    if bytes.len() > MAX_CHUNK_BYTES {
        return Err(format!("chunk of {} bytes exceeds {MAX_CHUNK_BYTES}", bytes.len()));
    }
    if !bytes.len().is_multiple_of(2) {
        return Err(format!("chunk of {} bytes is not whole 16-bit samples", bytes.len()));
    }
    Ok(bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    RateMismatch,
    ProducerBusy,
    NotProducer,
    Overrun,
    Rejected,
    /// A slow client missed events; the message says how many.
    Lagged,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySummary {
    pub total_bytes: usize,
    pub limit_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub mode: Mode,
    /// Vectors in the enrollment set.
    pub enrolled: usize,
    /// Enrollment capacity n.
    pub capacity: usize,
    pub threshold: f32,
    pub sample_rate_hz: u32,
    pub producer_active: bool,
    pub windows: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory: Option<MemorySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMessage {
    Event(PipelineEvent),
    Status(Status),
    Error { code: ErrorCode, message: String },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}
