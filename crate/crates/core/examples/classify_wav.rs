// Runs the keyword spotter and the d-vector extractor on one window of
// audio and prints the class scores and the embedding norm.
//
// cargo run -p tinysv --example classify_wav -- [input.wav] [ks.twb] [dvector.twb]
//
// Bundle paths default to freshly seeded reference networks, whose output
// is meaningless but well formed.

use tinysv::asv::{extract_dvector, DVector};
use tinysv::dsp::{read_wav, MfccExtractor, StreamConfig};
use tinysv::ks::{ks_classify, KsDecision};
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};
use tinysv::nn::WeightBundle;

pub fn run_example(
    samples: &[i16],
    ks: Option<WeightBundle>,
    fx: Option<WeightBundle>,
) -> tinysv::Result<(KsDecision, DVector)> {
    let cfg = StreamConfig::default();
    let ks = match ks {
        Some(b) => b,
        None => keyword_spotter_bundle(&cfg, 0)?,
    };
    let fx = match fx {
        Some(b) => b,
        None => dvector_bundle(&cfg, 1)?,
    };
    let spec = MfccExtractor::new(&cfg)?.extract_samples(samples)?;
    Ok((ks_classify(&ks, &spec)?, extract_dvector(&fx, &spec)?))
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let cfg = StreamConfig::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples = match args.first() {
        Some(p) => read_wav(p, cfg.sample_rate_hz)?,
        None => (0..cfg.window_samples()).map(|n| ((n * 7) % 4000) as i16 - 2000).collect(),
    };
    let ks = args.get(1).map(WeightBundle::load).transpose()?;
    let fx = args.get(2).map(WeightBundle::load).transpose()?;
    let (d, dv) = run_example(&samples, ks, fx)?;
    println!("class {:?} (y = {}), scores {:?}", d.class, d.y, d.scores);
    println!("d-vector: {} values, norm {:.3}", dv.dim(), dv.norm());
    Ok(())
}
