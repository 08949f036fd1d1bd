//! Reference architectures and a seeded fixture writer for them.
//!
//! The keyword spotter is two conv/max-pool blocks, a flatten and a 3-unit
//! softmax dense layer. The d-vector extractor is a batch-norm, four
//! convolutions with two max-pools and a flatten whose output is the
//! 256-element d-vector. All convolutions use same padding and ReLU.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::StreamConfig;
use crate::error::Result;
use crate::nn::ops::Activation;
use crate::nn::{Layer, LayerSpec, Shape, WeightBundle};

pub const KEYWORD_SPOTTER: &str = "keyword-spotter";
pub const DVECTOR_EXTRACTOR: &str = "dvector-extractor";

pub fn keyword_spotter_layers() -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv2d(8, 20, 16, 2),
        LayerSpec::maxpool2d(2),
        LayerSpec::conv2d(4, 10, 32, 1),
        LayerSpec::maxpool2d(2),
        LayerSpec::flatten(),
        LayerSpec::dense(3).with_activation(Activation::Softmax),
    ]
}

pub fn dvector_layers() -> Vec<LayerSpec> {
    vec![
        LayerSpec::batchnorm(),
        LayerSpec::conv2d(3, 3, 8, 1),
        LayerSpec::maxpool2d(3),
        LayerSpec::conv2d(3, 3, 16, 1),
        LayerSpec::maxpool2d(2),
        // Stride 2: the only setting that yields 3x4x32 = 384 activations.
        LayerSpec::conv2d(3, 3, 32, 2),
        LayerSpec::conv2d(3, 3, 64, 2),
        LayerSpec::flatten(),
    ]
}

pub fn spectrogram_shape(cfg: &StreamConfig) -> Result<Shape> {
    Ok(Shape::new(cfg.num_mel_bins, cfg.frame_count()?, 1))
}

/// Builds a bundle with He-initialised kernels (zero biases, identity
/// batch-norm statistics) from a fixed seed.
pub fn seeded_bundle(
    name: &str,
    cfg: &StreamConfig,
    specs: &[LayerSpec],
    seed: u64,
) -> Result<WeightBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = spectrogram_shape(cfg)?;
    let mut shape = input;
    let mut layers = Vec::with_capacity(specs.len());
    for spec in specs {
        let fan_in = match spec.kind {
            crate::nn::LayerKind::Conv2d { rows, cols, .. } => rows * cols * shape.channels,
            crate::nn::LayerKind::Dense { .. } => shape.len(),
            _ => 1,
        };
        let normal = Normal::new(0.0f32, (2.0 / fan_in as f32).sqrt()).expect("valid std");
        let layer = Layer::with_init(*spec, shape, |name, _| match name {
            "kernel" => normal.sample(&mut rng),
            "gamma" | "variance" => 1.0,
            _ => 0.0,
        });
        shape = spec.output_shape(shape)?;
        layers.push(layer);
    }
    let mut bundle = WeightBundle::new(name, cfg.fingerprint(), input, layers)?;
    bundle
        .metadata
        .insert("init".into(), serde_json::json!({ "scheme": "he-normal", "seed": seed }));
    Ok(bundle)
}

pub fn keyword_spotter_bundle(cfg: &StreamConfig, seed: u64) -> Result<WeightBundle> {
    seeded_bundle(KEYWORD_SPOTTER, cfg, &keyword_spotter_layers(), seed)
}

pub fn dvector_bundle(cfg: &StreamConfig, seed: u64) -> Result<WeightBundle> {
    seeded_bundle(DVECTOR_EXTRACTOR, cfg, &dvector_layers(), seed)
}
