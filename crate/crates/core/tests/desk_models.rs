//! End-to-end checks on real audio-shaped signals: a keyword spotter whose
//! dense head is fitted here on synthetic recordings, and the random-weight
//! d-vector extractor on synthetic voices.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use tinysv::asv::{cosine, extract_dvector};
use tinysv::dsp::{MfccExtractor, Spectrogram, StreamConfig};
use tinysv::ks::{KeywordModel, KeywordSpotter, KsClass};
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};
use tinysv::nn::{Shape, Tensor, WeightBundle};

const RATE: f64 = 16_000.0;

/// A harmonic "utterance": fundamental sweeping from `f0` by `sweep`,
/// with the given harmonic weights, inside a 0.6 s envelope at `onset`.
fn voice(rng: &mut ChaCha8Rng, f0: f64, sweep: f64, harmonics: &[f64], onset: f64) -> Vec<i16> {
    let noise = Normal::new(0.0, 60.0).unwrap();
    let mut phase = 0.0;
    (0..16_000)
        .map(|n| {
            let t = n as f64 / RATE;
            let u = (t - onset) / 0.6;
            let env = if (0.0..1.0).contains(&u) { (PI * u).sin() } else { 0.0 };
            phase += 2.0 * PI * (f0 + sweep * u.clamp(0.0, 1.0)) / RATE;
            let s: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(h, a)| a * ((h + 1) as f64 * phase).sin())
                .sum();
            (6000.0 * env * s + noise.sample(rng)).clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

fn babble(rng: &mut ChaCha8Rng) -> Vec<i16> {
    // Unknown speech: a steady vowel at a random pitch, no sweep.
    let f0 = rng.random_range(120.0..300.0);
    let onset = rng.random_range(0.0..0.35);
    voice(rng, f0, -40.0, &[0.3, 0.9, 0.2], onset)
}

fn keyword(rng: &mut ChaCha8Rng) -> Vec<i16> {
    // The keyword: a strong upward glide with a bright spectrum.
    let f0 = rng.random_range(140.0..220.0);
    let onset = rng.random_range(0.0..0.35);
    voice(rng, f0, 500.0, &[1.0, 0.6, 0.5, 0.4], onset)
}

fn silence(rng: &mut ChaCha8Rng) -> Vec<i16> {
    let amp = rng.random_range(0..40);
    (0..16_000).map(|_| if amp == 0 { 0 } else { rng.random_range(-amp..=amp) }).collect()
}

fn features(bundle: &WeightBundle, spec: &Spectrogram) -> Vec<f64> {
    let mut x = Tensor::new(Shape::new(spec.bins(), spec.frames(), 1), spec.coefficients().to_vec()).unwrap();
    for layer in &bundle.layers[..bundle.layers.len() - 1] {
        x = layer.forward(&x).unwrap();
    }
    x.data().iter().map(|v| f64::from(*v)).collect()
}

/// Multinomial logistic regression on standardised features, folded back
/// into raw-feature weights for the bundle's dense layer.
fn fit_head(xs: &[Vec<f64>], ys: &[usize]) -> (Vec<f32>, Vec<f32>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..d)
        .map(|j| (xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt().max(1e-6))
        .collect();
    let z: Vec<Vec<f64>> = xs.iter().map(|x| (0..d).map(|j| (x[j] - mean[j]) / std[j]).collect()).collect();
    let mut w = vec![[0.0f64; 3]; d];
    let mut b = [0.0f64; 3];
    for _ in 0..300 {
        let mut gw = vec![[0.0f64; 3]; d];
        let mut gb = [0.0f64; 3];
        for (x, y) in z.iter().zip(ys) {
            let mut logits = b;
            for (xj, wj) in x.iter().zip(&w) {
                for k in 0..3 {
                    logits[k] += xj * wj[k];
                }
            }
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let s: f64 = e.iter().sum();
            for k in 0..3 {
                let g = e[k] / s - if k == *y { 1.0 } else { 0.0 };
                gb[k] += g;
                for (xj, gj) in x.iter().zip(gw.iter_mut()) {
                    gj[k] += g * xj;
                }
            }
        }
        for k in 0..3 {
            b[k] -= 0.5 * gb[k] / n;
            for j in 0..d {
                w[j][k] -= 0.5 * (gw[j][k] / n + 1e-3 * w[j][k]);
            }
        }
    }
    let mut kernel = vec![0f32; d * 3];
    let mut bias = [0f64; 3];
    for k in 0..3 {
        bias[k] = b[k];
        for j in 0..d {
            kernel[j * 3 + k] = (w[j][k] / std[j]) as f32;
            bias[k] -= w[j][k] * mean[j] / std[j];
        }
    }
    (kernel, bias.iter().map(|v| *v as f32).collect())
}

#[test]
fn fitted_keyword_spotter_separates_held_out_clips() {
    let cfg = StreamConfig::default();
    let front = MfccExtractor::new(&cfg).unwrap();
    let mut bundle = keyword_spotter_bundle(&cfg, 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let clip = |rng: &mut ChaCha8Rng, k: usize| {
        let s = match k {
            0 => silence(rng),
            1 => babble(rng),
            _ => keyword(rng),
        };
        front.extract_samples(&s).unwrap()
    };

    let train: Vec<(Spectrogram, usize)> = (0..90).map(|i| (clip(&mut rng, i % 3), i % 3)).collect();
    let xs: Vec<Vec<f64>> = train.iter().map(|(s, _)| features(&bundle, s)).collect();
    let ys: Vec<usize> = train.iter().map(|(_, y)| *y).collect();
    let (kernel, bias) = fit_head(&xs, &ys);
    let head = bundle.layers.last_mut().unwrap();
    for p in &mut head.params {
        match p.name.as_str() {
            "kernel" => p.data = kernel.clone(),
            "bias" => p.data = bias.clone(),
            other => panic!("unexpected parameter {other}"),
        }
    }
    let bundle = WeightBundle::from_bytes(&bundle.to_bytes().unwrap()).unwrap();
    let spotter = KeywordSpotter::new(bundle).unwrap();

    let mut correct = 0;
    let total = 60;
    for i in 0..total {
        let y = i % 3;
        let d = spotter.classify(&clip(&mut rng, y)).unwrap();
        let is_kw = d.class == KsClass::Keyword;
        if is_kw == (y == 2) {
            correct += 1;
        }
    }
    let acc = correct as f64 / total as f64;
    assert!(acc > 0.85, "keyword-vs-rest held-out accuracy {acc}");
}

#[test]
fn random_extractor_keeps_voices_apart() {
    let cfg = StreamConfig::default();
    let front = MfccExtractor::new(&cfg).unwrap();
    let fx = dvector_bundle(&cfg, 23).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let speakers = [(110.0, vec![1.0, 0.3, 0.1]), (240.0, vec![0.2, 0.4, 1.0, 0.6])];
    let embeds: Vec<Vec<_>> = speakers
        .iter()
        .map(|(f0, h)| {
            (0..6)
                .map(|_| {
                    let onset = rng.random_range(0.0..0.35);
                    let f = f0 * rng.random_range(0.97..1.03);
                    let s = voice(&mut rng, f, 300.0, h, onset);
                    extract_dvector(&fx, &front.extract_samples(&s).unwrap()).unwrap()
                })
                .collect()
        })
        .collect();
    let mut same = Vec::new();
    let mut cross = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for (i, u) in embeds[a].iter().enumerate() {
                for (j, v) in embeds[b].iter().enumerate() {
                    if a == b && i < j {
                        same.push(f64::from(cosine(u, v).unwrap()));
                    } else if a < b {
                        cross.push(f64::from(cosine(u, v).unwrap()));
                    }
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&same) > mean(&cross), "same {} cross {}", mean(&same), mean(&cross));
}
