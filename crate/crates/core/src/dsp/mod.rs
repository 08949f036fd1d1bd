//! Audio front-end: stream windowing, MFCC extraction and WAV ingestion.

mod config;
mod mfcc;
mod stream;
mod wav;

pub use config::{frame_count, FrontEndFingerprint, StreamConfig};
pub use mfcc::{extract_mfcc, hz_to_mel, mel_to_hz, MfccExtractor, Spectrogram};
pub use stream::{AudioWindow, SampleStream};
pub use wav::{read_wav, write_wav};
