#![allow(dead_code)]

use tinysv::asv::{DVector, Embedder};
use tinysv::dsp::Spectrogram;
use tinysv::ks::{KeywordModel, KsDecision};
use tinysv::pipeline::{Pipeline, PipelineConfig};
use tinysv_service::Demo;

/// Keyword iff the window opens with sound.
pub struct OnsetSpotter;

impl KeywordModel for OnsetSpotter {
    fn classify(&self, spec: &Spectrogram) -> tinysv::Result<KsDecision> {
        Ok(KsDecision::from_scores(if spec.get(0, 0) > -40.0 {
            [0.0, 0.1, 0.9]
        } else {
            [0.9, 0.1, 0.0]
        }))
    }
}

/// Loud voices belong to the enrolled speaker, quieter ones to an impostor.
pub struct LoudnessVoice;

impl Embedder for LoudnessVoice {
    fn embed(&self, spec: &Spectrogram) -> tinysv::Result<DVector> {
        let c0 = spec.get(0, 0);
        DVector::new(if c0 > 8.0 {
            vec![1.0, 0.02 * spec.get(1, 0).sin(), 0.0]
        } else {
            vec![0.0, 0.1, 1.0]
        })
    }

    fn dim(&self) -> usize {
        3
    }
}

pub fn demo() -> Demo {
    let pipeline = Pipeline::with_models(PipelineConfig::default(), Box::new(OnsetSpotter), Box::new(LoudnessVoice)).unwrap();
    Demo::new(pipeline).unwrap()
}

/// `hops` hop-sized blocks; block k is noise of amplitude `levels(k)`.
pub fn script(hops: usize, levels: impl Fn(usize) -> i32) -> Vec<i16> {
    let mut seed = 7u32;
    let mut out = Vec::with_capacity(hops * 4000);
    for k in 0..hops {
        let level = levels(k);
        for _ in 0..4000 {
            seed = seed.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            out.push((level * ((seed >> 16) as i32 - 32_768) / 32_768) as i16);
        }
    }
    out
}

pub fn pcm(samples: &[i16]) -> Vec<u8> {
    samples.iter().flat_map(|s| s.to_le_bytes()).collect()
}
