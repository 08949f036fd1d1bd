use std::collections::VecDeque;

use crate::dsp::StreamConfig;
use crate::error::{Error, Result};

/// One analysis window of PCM samples cut from the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWindow {
    pub samples: Vec<i16>,
    /// Index of the first sample, counted from the stream origin.
    pub start_sample: u64,
    pub sample_rate_hz: u32,
}

impl AudioWindow {
    pub fn new(samples: Vec<i16>, start_sample: u64, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            start_sample,
            sample_rate_hz,
        }
    }

    pub fn start_time(&self) -> f64 {
        self.start_sample as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn end_time(&self) -> f64 {
        (self.start_sample + self.samples.len() as u64) as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Cuts a continuous PCM stream into overlapping windows.
///
/// Single producer, single consumer: whoever owns the stream pushes chunks
/// and receives the windows they complete.
#[derive(Debug, Clone)]
pub struct SampleStream {
    window: usize,
    hop: usize,
    capacity: usize,
    sample_rate_hz: u32,
    buffer: VecDeque<i16>,
    /// Absolute index of `buffer[0]`.
    buffer_origin: u64,
    next_start: u64,
}

impl SampleStream {
    /// Ring capacity defaults to four windows.
    pub fn new(cfg: &StreamConfig) -> Result<Self> {
        Self::with_capacity(cfg, 4 * cfg.window_samples())
    }

    pub fn with_capacity(cfg: &StreamConfig, capacity: usize) -> Result<Self> {
        cfg.validate()?;
        let window = cfg.window_samples();
        if capacity < window {
            return Err(Error::InvalidConfig(format!(
                "ring capacity {capacity} smaller than one window ({window})"
            )));
        }
        Ok(Self {
            window,
            hop: cfg.hop_samples(),
            capacity,
            sample_rate_hz: cfg.sample_rate_hz,
            buffer: VecDeque::with_capacity(capacity),
            buffer_origin: 0,
            next_start: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Total samples accepted so far.
    pub fn samples_seen(&self) -> u64 {
        self.buffer_origin + self.buffer.len() as u64
    }

    /// Appends a chunk and returns every window it completes, oldest first.
    ///
    /// A chunk that does not fit in the free ring space is rejected whole and
    /// reported as an overrun; the stream state is left untouched.
    pub fn push_samples(&mut self, chunk: &[i16]) -> Result<Vec<AudioWindow>> {
        if self.buffer.len() + chunk.len() > self.capacity {
            return Err(Error::Overrun {
                dropped: chunk.len(),
                capacity: self.capacity,
                buffered: self.buffer.len(),
            });
        }
        self.buffer.extend(chunk.iter().copied());

        let mut out = Vec::new();
        while self.samples_seen() >= self.next_start + self.window as u64 {
            let offset = (self.next_start - self.buffer_origin) as usize;
            let samples: Vec<i16> = self
                .buffer
                .range(offset..offset + self.window)
                .copied()
                .collect();
            out.push(AudioWindow::new(samples, self.next_start, self.sample_rate_hz));
            self.next_start += self.hop as u64;
        }

        // Samples before the next window start are never needed again.
        let stale = (self.next_start.saturating_sub(self.buffer_origin) as usize).min(self.buffer.len());
        self.buffer.drain(..stale);
        self.buffer_origin += stale as u64;
        Ok(out)
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
        self.buffer_origin = 0;
        self.next_start = 0;
    }
}
