//! Adaptive speaker verification.
//!
//! Enrollment stores d-vectors verbatim; verification takes the best cosine
//! similarity between a probe and any enrolled vector and compares it to a
//! threshold. Nothing is trained on the device beyond appending vectors.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::ks::spectrogram_tensor;
use crate::nn::WeightBundle;

pub const DEFAULT_THRESHOLD: f32 = 0.8;

/// Speaker embedding produced by the d-vector extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DVector(Vec<f32>);

impl DVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::UndefinedSimilarity("d-vector has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f32) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

impl From<DVector> for Vec<f32> {
    fn from(v: DVector) -> Self {
        v.0
    }
}

/// Cosine similarity accumulated in f64 and clamped to `[-1, 1]`.
pub fn cosine(a: &DVector, b: &DVector) -> Result<f32> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity("zero-norm d-vector".into()));
    }
    let dot: f64 = a
        .0
        .iter()
        .zip(&b.0)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0) as f32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub filled: usize,
    pub capacity: usize,
}

impl Progress {
    pub fn is_complete(&self) -> bool {
        self.filled >= self.capacity
    }
}

/// The enrolled speaker: up to `capacity` d-vectors and the decision
/// threshold. This is the whole of the learned state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrollmentSet {
    dim: usize,
    capacity: usize,
    vectors: Vec<DVector>,
    threshold: f32,
}

fn check_threshold(t: f32) -> Result<()> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("threshold {t} outside [-1, 1]")))
    }
}

impl EnrollmentSet {
    pub fn new(dim: usize, capacity: usize, threshold: f32) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(Self {
            dim,
            capacity,
            vectors: Vec::with_capacity(capacity),
            threshold,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.vectors.len() >= self.capacity
    }

    pub fn vectors(&self) -> &[DVector] {
        &self.vectors
    }

    pub fn threshold(&self) -> f32 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f32) -> Result<()> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn progress(&self) -> Progress {
        Progress {
            filled: self.vectors.len(),
            capacity: self.capacity,
        }
    }

    /// Appends `dv` unchanged.
    pub fn enroll(&mut self, dv: DVector) -> Result<Progress> {
        if self.is_full() {
            return Err(Error::EnrollmentComplete {
                capacity: self.capacity,
            });
        }
        if dv.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: dv.dim(),
            });
        }
        self.vectors.push(dv);
        Ok(self.progress())
    }

    /// Drops every enrolled vector; the threshold is kept.
    pub fn clear(&mut self) {
        self.vectors.clear();
    }

    /// Bytes of learned state: `d * n` floats.
    pub fn state_bytes(&self) -> usize {
        self.dim * self.capacity * std::mem::size_of::<f32>()
    }

    /// Element-wise mean of the enrolled vectors.
    pub fn mean_vector(&self) -> Result<DVector> {
        if self.vectors.is_empty() {
            return Err(Error::UndefinedSimilarity("enrollment set is empty".into()));
        }
        let mut sum = vec![0f32; self.dim];
        for v in &self.vectors {
            for (s, x) in sum.iter_mut().zip(v.as_slice()) {
                *s += x;
            }
        }
        let n = self.vectors.len() as f32;
        DVector::new(sum.into_iter().map(|s| s / n).collect())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(ENROLLMENT_MAGIC)?;
        w.write_all(&ENROLLMENT_VERSION.to_le_bytes())?;
        for v in [self.dim, self.capacity, self.vectors.len()] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&self.threshold.to_le_bytes())?;
        for dv in &self.vectors {
            for x in dv.as_slice() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.vectors.len() * self.dim * 4);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("enrollment file: {m}"));
        if bytes.len() < 24 || &bytes[..4] != ENROLLMENT_MAGIC {
            return Err(bad("missing TSVE header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        if word(4) != ENROLLMENT_VERSION {
            return Err(bad(&format!("unsupported version {}", word(4))));
        }
        let (dim, capacity, count) = (word(8) as usize, word(12) as usize, word(16) as usize);
        let threshold = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
        if count > capacity {
            return Err(bad("more vectors than capacity"));
        }
        let body = &bytes[24..];
        if body.len() != count * dim * 4 {
            return Err(bad(&format!(
                "body has {} bytes, expected {}",
                body.len(),
                count * dim * 4
            )));
        }
        let mut set = Self::new(dim, capacity, threshold)?;
        if dim > 0 {
            for chunk in body.chunks_exact(dim * 4) {
                let values = chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect();
                set.enroll(DVector::new(values)?)?;
            }
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

const ENROLLMENT_MAGIC: &[u8; 4] = b"TSVE";
const ENROLLMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvDecision {
    /// 1 when the probe is accepted as the enrolled speaker.
    pub z: u8,
    pub sigma: f32,
    pub best_index: usize,
}

/// Best-match cosine similarity of `dv` against the enrolled vectors and the
/// index of the winner (lowest index on ties).
pub fn best_match_similarity(dv: &DVector, set: &EnrollmentSet) -> Result<(f32, usize)> {
    if set.is_empty() {
        return Err(Error::UndefinedSimilarity("enrollment set is empty".into()));
    }
    let mut best = (f32::NEG_INFINITY, 0);
    for (i, enrolled) in set.vectors().iter().enumerate() {
        let s = cosine(dv, enrolled)?;
        if s > best.0 {
            best = (s, i);
        }
    }
    Ok(best)
}

/// Accept iff sigma is strictly above the threshold.
pub fn sv_decide(dv: &DVector, set: &EnrollmentSet) -> Result<SvDecision> {
    let (sigma, best_index) = best_match_similarity(dv, set)?;
    Ok(SvDecision {
        z: u8::from(sigma > set.threshold()),
        sigma,
        best_index,
    })
}

/// Mean-cosine-similarity baseline: cosine against the mean enrolled vector.
pub fn mcs_similarity(dv: &DVector, set: &EnrollmentSet) -> Result<f32> {
    cosine(dv, &set.mean_vector()?)
}

/// Anything that maps a spectrogram to a d-vector.
pub trait Embedder: Send + Sync {
    fn embed(&self, spec: &Spectrogram) -> Result<DVector>;
    fn dim(&self) -> usize;
}

#[derive(Debug, Clone)]
pub struct DVectorExtractor {
    bundle: WeightBundle,
    dim: usize,
}

impl DVectorExtractor {
    pub fn new(bundle: WeightBundle) -> Result<Self> {
        bundle.count_params()?;
        let dim = bundle.output_len()?;
        Ok(Self { bundle, dim })
    }

    pub fn bundle(&self) -> &WeightBundle {
        &self.bundle
    }
}

impl Embedder for DVectorExtractor {
    fn embed(&self, spec: &Spectrogram) -> Result<DVector> {
        extract_dvector(&self.bundle, spec)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

pub fn extract_dvector(bundle: &WeightBundle, spec: &Spectrogram) -> Result<DVector> {
    let input = spectrogram_tensor(bundle, spec)?;
    DVector::new(bundle.run(&input)?)
}
