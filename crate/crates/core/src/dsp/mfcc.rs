use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dsp::config::{LOG_FLOOR, MEL_LOW_HZ, PCM_SCALE};
use crate::dsp::{AudioWindow, FrontEndFingerprint, StreamConfig};
use crate::error::{Error, Result};

/// An `bins x frames` matrix of MFCC coefficients, stored bin-major
/// (`coefficients[bin * frames + frame]`).
///
/// The layout is the same as a `(bins, frames, 1)` tensor, so a spectrogram
/// feeds a network without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: usize,
    frames: usize,
    coefficients: Vec<f32>,
    fingerprint: FrontEndFingerprint,
}

impl Spectrogram {
    pub fn from_parts(
        bins: usize,
        frames: usize,
        coefficients: Vec<f32>,
        fingerprint: FrontEndFingerprint,
    ) -> Result<Self> {
        if coefficients.len() != bins * frames {
            return Err(Error::Dimension {
                expected: bins * frames,
                actual: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("spectrogram contains non-finite values".into()));
        }
        Ok(Self {
            bins,
            frames,
            coefficients,
            fingerprint,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f32] {
        &self.coefficients
    }

    pub fn get(&self, bin: usize, frame: usize) -> f32 {
        self.coefficients[bin * self.frames + frame]
    }

    pub fn column(&self, frame: usize) -> Vec<f32> {
        (0..self.bins).map(|b| self.get(b, frame)).collect()
    }

    pub fn fingerprint(&self) -> &FrontEndFingerprint {
        &self.fingerprint
    }

    /// CSV dump, one row per mel bin and one column per frame.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 12);
        for bin in 0..self.bins {
            for frame in 0..self.frames {
                if frame > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.get(bin, frame));
            }
            out.push('\n');
        }
        out
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed MFCC front-end: Hamming window, zero-padded power spectrum,
/// triangular mel filterbank, natural log with a floor and an orthonormal
/// DCT-II keeping every coefficient.
///
/// Pure after construction; share it freely between threads.
#[derive(Clone)]
pub struct MfccExtractor {
    cfg: StreamConfig,
    fingerprint: FrontEndFingerprint,
    frame_len: usize,
    stride: usize,
    frames: usize,
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    window: Vec<f64>,
    /// `bins x (fft_size / 2 + 1)`, row-major.
    filterbank: Vec<f64>,
    /// `bins x bins`, row-major; row k is the k-th cosine basis vector.
    dct: Vec<f64>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .field("frames", &self.frames)
            .field("fft_size", &self.fft_size)
            .finish()
    }
}

impl MfccExtractor {
    pub fn new(cfg: &StreamConfig) -> Result<Self> {
        cfg.validate()?;
        let frame_len = cfg.frame_samples();
        let fft_size = cfg.fft_size();
        let bins = cfg.num_mel_bins;
        let frames = cfg.frame_count()?;

        let window = if frame_len == 1 {
            vec![1.0]
        } else {
            (0..frame_len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos())
                .collect()
        };

        let filterbank = mel_filterbank(
            bins,
            fft_size,
            f64::from(cfg.sample_rate_hz),
            MEL_LOW_HZ,
            cfg.mel_high_hz(),
        );

        let mut dct = vec![0.0; bins * bins];
        for k in 0..bins {
            let scale = if k == 0 {
                (1.0 / bins as f64).sqrt()
            } else {
                (2.0 / bins as f64).sqrt()
            };
            for n in 0..bins {
                dct[k * bins + n] =
                    scale * (PI * k as f64 * (2 * n + 1) as f64 / (2 * bins) as f64).cos();
            }
        }

        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Self {
            cfg: cfg.clone(),
            fingerprint: cfg.fingerprint(),
            frame_len,
            stride: cfg.frame_stride_samples(),
            frames,
            fft,
            fft_size,
            window,
            filterbank,
            dct,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.cfg
    }

    pub fn fingerprint(&self) -> &FrontEndFingerprint {
        &self.fingerprint
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.cfg.num_mel_bins
    }

    /// Triangular filter weights, `bins x (fft_size / 2 + 1)` row-major.
    pub fn filterbank(&self) -> &[f64] {
        &self.filterbank
    }

    pub fn extract(&self, window: &AudioWindow) -> Result<Spectrogram> {
        if window.sample_rate_hz != self.cfg.sample_rate_hz {
            return Err(Error::InvalidConfig(format!(
                "window sampled at {} Hz, front-end expects {} Hz",
                window.sample_rate_hz, self.cfg.sample_rate_hz
            )));
        }
        self.extract_samples(&window.samples)
    }

    pub fn extract_samples(&self, samples: &[i16]) -> Result<Spectrogram> {
        let energies = self.mel_energies(samples)?;
        let bins = self.bins();
        let mut coefficients = vec![0f32; bins * self.frames];
        let mut logs = vec![0.0; bins];
        for (frame, energy) in energies.iter().enumerate() {
            for (l, e) in logs.iter_mut().zip(energy) {
                *l = e.max(LOG_FLOOR).ln();
            }
            for k in 0..bins {
                let row = &self.dct[k * bins..(k + 1) * bins];
                let c: f64 = row.iter().zip(&logs).map(|(a, b)| a * b).sum();
                coefficients[k * self.frames + frame] = c as f32;
            }
        }
        Spectrogram::from_parts(bins, self.frames, coefficients, self.fingerprint.clone())
    }

    /// Mel filter energies before the log and DCT, one vector per frame.
    pub fn mel_energies(&self, samples: &[i16]) -> Result<Vec<Vec<f64>>> {
        let expected = self.cfg.window_samples();
        if samples.len() != expected {
            return Err(Error::WindowLength {
                expected,
                actual: samples.len(),
            });
        }
        let half = self.fft_size / 2 + 1;
        let bins = self.bins();
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; half];
        let mut out = Vec::with_capacity(self.frames);

        for frame in 0..self.frames {
            let start = frame * self.stride;
            let segment = &samples[start..start + self.frame_len];
            for (slot, (s, w)) in buf.iter_mut().zip(segment.iter().zip(&self.window)) {
                *slot = Complex::new(f64::from(*s) / PCM_SCALE * w, 0.0);
            }
            for slot in &mut buf[self.frame_len..] {
                *slot = Complex::new(0.0, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf[..half]) {
                *p = c.norm_sqr();
            }
            let energy: Vec<f64> = (0..bins)
                .map(|m| {
                    self.filterbank[m * half..(m + 1) * half]
                        .iter()
                        .zip(&power)
                        .map(|(w, p)| w * p)
                        .sum()
                })
                .collect();
            out.push(energy);
        }
        Ok(out)
    }
}

fn mel_filterbank(bins: usize, fft_size: usize, rate: f64, low_hz: f64, high_hz: f64) -> Vec<f64> {
    let half = fft_size / 2 + 1;
    let (low, high) = (hz_to_mel(low_hz), hz_to_mel(high_hz));
    let edges: Vec<f64> = (0..bins + 2)
        .map(|k| mel_to_hz(low + (high - low) * k as f64 / (bins + 1) as f64))
        .collect();
    let mut bank = vec![0.0; bins * half];
    for m in 0..bins {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for b in 0..half {
            let f = b as f64 * rate / fft_size as f64;
            let w = if f >= left && f <= centre {
                (f - left) / (centre - left)
            } else if f > centre && f <= right {
                (right - f) / (right - centre)
            } else {
                0.0
            };
            bank[m * half + b] = w;
        }
    }
    bank
}

/// One-shot convenience wrapper around [`MfccExtractor`].
pub fn extract_mfcc(window: &AudioWindow, cfg: &StreamConfig) -> Result<Spectrogram> {
    MfccExtractor::new(cfg)?.extract(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extractor() -> MfccExtractor {
        MfccExtractor::new(&StreamConfig::default()).unwrap()
    }

    fn sine(freq: f64, amplitude: f64, len: usize) -> Vec<i16> {
        (0..len)
            .map(|n| (amplitude * 32767.0 * (2.0 * PI * freq * n as f64 / 16_000.0).sin()).round() as i16)
            .collect()
    }

    #[test]
    fn reference_shape_is_40_by_49() {
        let s = extractor().extract_samples(&vec![0; 16_000]).unwrap();
        assert_eq!((s.bins(), s.frames(), s.len()), (40, 49, 1960));
    }

    #[test]
    fn silence_columns_are_identical() {
        let s = extractor().extract_samples(&vec![0; 16_000]).unwrap();
        let first = s.column(0);
        for f in 1..s.frames() {
            assert_eq!(s.column(f), first);
        }
        // ln(1e-6) spread by the orthonormal DCT lands entirely in c0
        let expected_c0 = (1e-6f64).ln() * (40f64).sqrt();
        assert!((f64::from(first[0]) - expected_c0).abs() < 1e-3);
        assert!(first[1..].iter().all(|c| c.abs() < 1e-4));
    }

    #[test]
    fn mel_energy_of_1khz_peaks_in_the_1khz_filter() {
        // independent edge computation: 42 mel-spaced points over 20 Hz..8 kHz
        let lo = 2595.0 * (1.0 + 20.0f64 / 700.0).log10();
        let hi = 2595.0 * (1.0 + 8000.0f64 / 700.0).log10();
        let edges: Vec<f64> = (0..42)
            .map(|k| 700.0 * (10f64.powf((lo + (hi - lo) * k as f64 / 41.0) / 2595.0) - 1.0))
            .collect();
        let response = |m: usize| {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            if (l..=c).contains(&1000.0) {
                (1000.0 - l) / (c - l)
            } else if (c..=r).contains(&1000.0) {
                (r - 1000.0) / (r - c)
            } else {
                0.0
            }
        };
        let target = (0..40)
            .max_by(|a, b| response(*a).partial_cmp(&response(*b)).unwrap())
            .unwrap();
        assert_eq!(target, 13);

        let energies = extractor().mel_energies(&sine(1000.0, 0.5, 16_000)).unwrap();
        assert_eq!(energies.len(), 49);
        for frame in energies {
            let peak = frame
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(peak, target);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(matches!(
            extractor().extract_samples(&[0; 100]),
            Err(Error::WindowLength { expected: 16_000, actual: 100 })
        ));
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let s = extractor().extract_samples(&vec![0; 16_000]).unwrap();
        let csv = s.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r.split(',').count() == 49));
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [20.0, 440.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }
}
