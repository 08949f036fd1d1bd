// Streams audio through the keyword-gated cascade with two stand-in models
// and prints one JSON event per window.
//
// One vector u is enrolled with threshold 0.9. A loud "keyword" embeds to u
// and verifies (x = 2); a quieter one embeds to a vector orthogonal to u and
// is rejected (x = 1); silence never reaches the extractor (x = 0).
//
// cargo run -p tinysv --example cascade_stream

use tinysv::asv::{DVector, Embedder, EnrollmentSet};
use tinysv::dsp::{SampleStream, Spectrogram};
use tinysv::ks::{KeywordModel, KsDecision};
use tinysv::pipeline::{Pipeline, PipelineConfig, PipelineEvent};

/// Anything above digital silence is the keyword.
struct EnergySpotter;

impl KeywordModel for EnergySpotter {
    fn classify(&self, spec: &Spectrogram) -> tinysv::Result<KsDecision> {
        let keyword = spec.get(0, 0) > -60.0;
        Ok(KsDecision::from_scores(if keyword { [0.0, 0.1, 0.9] } else { [0.9, 0.1, 0.0] }))
    }
}

/// Loud windows sound like the enrolled speaker, quiet ones do not.
struct LoudnessVoice {
    split: f32,
}

impl Embedder for LoudnessVoice {
    fn embed(&self, spec: &Spectrogram) -> tinysv::Result<DVector> {
        DVector::new(if spec.get(0, 0) > self.split { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
    }

    fn dim(&self) -> usize {
        2
    }
}

pub fn run_example() -> tinysv::Result<Vec<PipelineEvent>> {
    let cfg = PipelineConfig {
        enrollment_size: 1,
        threshold: 0.9,
        refractory_hops: 0,
        ..PipelineConfig::default()
    };
    let mut pipeline = Pipeline::with_models(cfg.clone(), Box::new(EnergySpotter), Box::new(LoudnessVoice { split: 0.0 }))?;
    let mut set = EnrollmentSet::new(2, 1, cfg.threshold)?;
    set.enroll(DVector::new(vec![1.0, 0.0])?)?;
    pipeline.restore_enrollment(set)?;

    let mut stream = SampleStream::new(&cfg.stream)?;
    let hop = cfg.stream.hop_samples();
    // Window k starts with block k, and the spotter only looks at the start
    // of a window, so each block decides its window's label.
    let mut seed = 1u32;
    let mut audio = Vec::new();
    for level in [0i32, 9000, 0, 300, 0, 0] {
        audio.extend((0..hop).map(|_| {
            seed = seed.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            (level * ((seed >> 16) as i32 - 32_768) / 32_768) as i16
        }));
    }
    audio.extend(std::iter::repeat_n(0, cfg.stream.window_samples() - hop));

    let mut events = Vec::new();
    for chunk in audio.chunks(1000) {
        for window in stream.push_samples(chunk)? {
            events.push(pipeline.process_window(&window)?);
        }
    }
    Ok(events)
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    for e in run_example()? {
        println!("{}", serde_json::to_string(&e)?);
    }
    Ok(())
}
