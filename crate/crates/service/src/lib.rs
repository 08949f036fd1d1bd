//! Streaming demo service around the keyword-gated verification pipeline.
//!
//! [`Demo`] is the transport-free core: it owns the pipeline, admits one
//! audio producer at a time and turns [`ClientMessage`]s into
//! [`ServerMessage`]s. [`server`] puts it behind HTTP and a WebSocket.
//!
//! Wire format (all JSON field names are fixed):
//!
//! * client text frames: `{"kind":"set_threshold","value":0.85}`,
//!   `{"kind":"reset_enrollment"}`, `{"kind":"get_status"}`
//! * client binary frames: one `audio_chunk`, 16-bit little-endian mono PCM,
//!   at most 64 KiB
//! * server text frames: `{"kind":"event","t":..,"x":..,"detail":{..}}`,
//!   `{"kind":"status",..}`, `{"kind":"error","code":..,"message":..}`

mod demo;
mod messages;
pub mod server;

pub use demo::{Demo, SessionId};
pub use messages::{
    decode_pcm, parse_control, ClientMessage, ErrorCode, MemorySummary, ServerMessage, Status, MAX_CHUNK_BYTES,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("session declared {declared} Hz but the pipeline runs at {expected} Hz")]
    RateMismatch { declared: u32, expected: u32 },
    #[error("another session already owns the audio input")]
    ProducerBusy,
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error(transparent)]
    Core(#[from] tinysv::Error),
}
