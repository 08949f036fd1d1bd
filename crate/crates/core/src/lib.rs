//! Keyword-gated speaker verification for always-on audio.
//!
//! A keyword-spotting CNN watches a stream of overlapping one-second
//! windows. Windows that contain the keyword are embedded into d-vectors by
//! a second CNN; the first `n` of them enroll the speaker and every later one
//! is verified by its best-match cosine similarity against the enrollment
//! set.
//!
//! ```no_run
//! use tinysv::dsp::{SampleStream, StreamConfig};
//! use tinysv::nn::reference;
//! use tinysv::pipeline::{Pipeline, PipelineConfig};
//!
//! let cfg = StreamConfig::default();
//! let ks = reference::keyword_spotter_bundle(&cfg, 1)?;
//! let fx = reference::dvector_bundle(&cfg, 2)?;
//! let mut pipeline = Pipeline::from_bundles(PipelineConfig::default(), ks, fx)?;
//! let mut stream = SampleStream::new(&cfg)?;
//! for window in stream.push_samples(&vec![0i16; 16_000])? {
//!     let event = pipeline.process_window(&window)?;
//!     println!("{}", serde_json::to_string(&event)?);
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod asv;
pub mod config;
pub mod dsp;
mod error;
pub mod eval;
pub mod ks;
pub mod memory;
pub mod nn;
pub mod pipeline;

pub use error::{Error, Result};
