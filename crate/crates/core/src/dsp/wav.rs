use std::path::Path;

use crate::error::{Error, Result};

/// Reads a 16-bit mono WAV file whose sample rate must equal `expected_rate`.
/// No resampling is attempted.
pub fn read_wav(path: impl AsRef<Path>, expected_rate: u32) -> Result<Vec<i16>> {
    let path = path.as_ref();
    let audio_err = |reason: String| Error::Audio {
        path: path.to_path_buf(),
        reason,
    };
    let reader = hound::WavReader::open(path).map_err(|e| audio_err(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(audio_err(format!("expected mono, found {} channels", spec.channels)));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(audio_err(format!(
            "expected 16-bit integer PCM, found {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if spec.sample_rate != expected_rate {
        return Err(audio_err(format!(
            "sample rate {} Hz, expected {} Hz",
            spec.sample_rate, expected_rate
        )));
    }
    reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| audio_err(e.to_string()))
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[i16], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| Error::Audio {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for s in samples {
        writer.write_sample(*s).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}
