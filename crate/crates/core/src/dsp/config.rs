use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timing parameters of the audio front-end.
///
/// All durations are in seconds and must land on whole sample counts at
/// `sample_rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub sample_rate_hz: u32,
    /// Length of one analysis window.
    pub window_seconds: f64,
    /// Advance between consecutive windows.
    pub hop_seconds: f64,
    /// Length of one MFCC frame.
    pub frame_seconds: f64,
    /// Advance between consecutive MFCC frames.
    pub frame_stride_seconds: f64,
    pub num_mel_bins: usize,
}

impl Default for StreamConfig {
    /// 1 s windows at 16 kHz advancing by 0.25 s, 30 ms frames every 20 ms,
    /// 40 mel bins.
    fn default() -> Self {
        Self {
            sample_rate_hz: 16_000,
            window_seconds: 1.0,
            hop_seconds: 0.25,
            frame_seconds: 0.030,
            frame_stride_seconds: 0.020,
            num_mel_bins: 40,
        }
    }
}

fn whole_samples(name: &str, seconds: f64, rate: u32) -> Result<usize> {
    let exact = seconds * f64::from(rate);
    let rounded = exact.round();
    if !exact.is_finite() || (exact - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "{name} = {seconds} s is not a positive whole number of samples at {rate} Hz"
        )));
    }
    Ok(rounded as usize)
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample_rate_hz must be positive".into()));
        }
        if self.num_mel_bins == 0 {
            return Err(Error::InvalidConfig("num_mel_bins must be positive".into()));
        }
        let window = whole_samples("window_seconds", self.window_seconds, self.sample_rate_hz)?;
        let hop = whole_samples("hop_seconds", self.hop_seconds, self.sample_rate_hz)?;
        let frame = whole_samples("frame_seconds", self.frame_seconds, self.sample_rate_hz)?;
        let stride = whole_samples(
            "frame_stride_seconds",
            self.frame_stride_seconds,
            self.sample_rate_hz,
        )?;
        if frame > window {
            return Err(Error::InvalidConfig(format!(
                "frame ({frame} samples) longer than window ({window} samples)"
            )));
        }
        if stride > frame {
            return Err(Error::InvalidConfig(format!(
                "frame stride ({stride}) exceeds frame length ({frame})"
            )));
        }
        if hop > window {
            return Err(Error::InvalidConfig(format!(
                "hop ({hop}) exceeds window ({window})"
            )));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.window_seconds * f64::from(self.sample_rate_hz)).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_seconds * f64::from(self.sample_rate_hz)).round() as usize
    }

    pub fn frame_samples(&self) -> usize {
        (self.frame_seconds * f64::from(self.sample_rate_hz)).round() as usize
    }

    pub fn frame_stride_samples(&self) -> usize {
        (self.frame_stride_seconds * f64::from(self.sample_rate_hz)).round() as usize
    }

    /// Number of MFCC frames (spectrogram columns) per window.
    pub fn frame_count(&self) -> Result<usize> {
        frame_count(
            self.window_samples(),
            self.frame_samples(),
            self.frame_stride_samples(),
        )
    }

    /// FFT length: the next power of two covering one frame.
    pub fn fft_size(&self) -> usize {
        self.frame_samples().next_power_of_two()
    }

    pub fn fingerprint(&self) -> FrontEndFingerprint {
        FrontEndFingerprint {
            sample_rate_hz: self.sample_rate_hz,
            window_samples: self.window_samples(),
            frame_samples: self.frame_samples(),
            frame_stride_samples: self.frame_stride_samples(),
            num_mel_bins: self.num_mel_bins,
            fft_size: self.fft_size(),
            window_function: WINDOW_FUNCTION.to_string(),
            mel_low_hz: MEL_LOW_HZ,
            mel_high_hz: self.mel_high_hz(),
            log_floor: LOG_FLOOR,
            dct: DCT_KIND.to_string(),
            pcm_scale: PCM_SCALE,
        }
    }

    pub(crate) fn mel_high_hz(&self) -> f64 {
        (f64::from(self.sample_rate_hz) / 2.0).min(MEL_HIGH_HZ)
    }
}

/// Frames of `frame_len` samples advancing by `stride` that fit in
/// `window_len` samples: `1 + floor((window - frame) / stride)`.
pub fn frame_count(window_len: usize, frame_len: usize, stride: usize) -> Result<usize> {
    if frame_len == 0 || stride == 0 {
        return Err(Error::InvalidConfig(
            "frame length and stride must be positive".into(),
        ));
    }
    if frame_len > window_len {
        return Err(Error::InvalidConfig(format!(
            "frame length {frame_len} exceeds window length {window_len}"
        )));
    }
    Ok(1 + (window_len - frame_len) / stride)
}

pub(crate) const WINDOW_FUNCTION: &str = "hamming";
pub(crate) const MEL_LOW_HZ: f64 = 20.0;
pub(crate) const MEL_HIGH_HZ: f64 = 8000.0;
pub(crate) const LOG_FLOOR: f64 = 1e-6;
pub(crate) const DCT_KIND: &str = "dct-ii-ortho";
pub(crate) const PCM_SCALE: f64 = 32768.0;

/// Every front-end choice that changes spectrogram values. Networks record
/// the fingerprint they were trained against and refuse mismatching input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEndFingerprint {
    pub sample_rate_hz: u32,
    pub window_samples: usize,
    pub frame_samples: usize,
    pub frame_stride_samples: usize,
    pub num_mel_bins: usize,
    pub fft_size: usize,
    pub window_function: String,
    pub mel_low_hz: f64,
    pub mel_high_hz: f64,
    pub log_floor: f64,
    pub dct: String,
    pub pcm_scale: f64,
}

impl FrontEndFingerprint {
    pub(crate) fn ensure_matches(&self, other: &FrontEndFingerprint) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FingerprintMismatch(format!(
                "network expects {self:?}, input was produced by {other:?}"
            )))
        }
    }
}
