//! Synthetic d-vector populations for exercising the protocol without audio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::asv::DVector;
use crate::eval::dataset::{split_counts, Embedded, Split};

/// Speakers as Gaussian clusters around a shared centre.
///
/// Each speaker owns `modes` sub-clusters (ways of saying the keyword); an
/// utterance picks one at random and adds isotropic noise. All offsets are
/// per-dimension standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpeakers {
    pub speakers: usize,
    pub utterances_per_speaker: usize,
    pub dim: usize,
    pub modes: usize,
    pub shared_offset: f32,
    pub speaker_spread: f32,
    pub mode_spread: f32,
    pub noise: f32,
}

impl Default for GaussianSpeakers {
    /// Four speakers with 94 utterances each, 256-dimensional. Per dimension
    /// the speaker centres are weak next to the per-utterance noise, so a
    /// single enrollment vector is a poor reference and more vectors help.
    fn default() -> Self {
        Self {
            speakers: 4,
            utterances_per_speaker: 94,
            dim: 256,
            modes: 6,
            shared_offset: 2.0,
            speaker_spread: 0.3,
            mode_spread: 0.5,
            noise: 1.0,
        }
    }
}

impl GaussianSpeakers {
    /// Utterances in speaker order, split 68/16/16 within each speaker.
    pub fn generate(&self, seed: u64) -> Vec<Embedded> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = |rng: &mut ChaCha8Rng, scale: f32| -> Vec<f32> {
            (0..self.dim)
                .map(|_| {
                    let z: f32 = StandardNormal.sample(rng);
                    z * scale
                })
                .collect()
        };
        let shared: Vec<f32> = vec![self.shared_offset; self.dim];
        let mut out = Vec::with_capacity(self.speakers * self.utterances_per_speaker);
        let (train, val, _) = split_counts(self.utterances_per_speaker);
        for s in 0..self.speakers {
            let centre: Vec<f32> = gauss(&mut rng, self.speaker_spread)
                .into_iter()
                .zip(&shared)
                .map(|(a, b)| a + b)
                .collect();
            let modes: Vec<Vec<f32>> = (0..self.modes.max(1))
                .map(|_| {
                    gauss(&mut rng, self.mode_spread)
                        .into_iter()
                        .zip(&centre)
                        .map(|(a, b)| a + b)
                        .collect()
                })
                .collect();
            for u in 0..self.utterances_per_speaker {
                let mode = &modes[rng.random_range(0..modes.len())];
                let values: Vec<f32> = gauss(&mut rng, self.noise)
                    .into_iter()
                    .zip(mode)
                    .map(|(a, b)| a + b)
                    .collect();
                let split = if u < train {
                    Split::Train
                } else if u < train + val {
                    Split::Val
                } else {
                    Split::Test
                };
                out.push(Embedded {
                    speaker: format!("spk{s}"),
                    split,
                    dvector: DVector::new(values).expect("finite"),
                });
            }
        }
        out
    }
}
