//! Keyword spotting: a three-class network whose argmax gates the rest of the
//! pipeline.

use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::nn::{ops, Activation, Shape, Tensor, WeightBundle};

/// Output classes in network index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsClass {
    Silence = 0,
    Unknown = 1,
    Keyword = 2,
}

impl KsClass {
    pub const ALL: [KsClass; 3] = [KsClass::Silence, KsClass::Unknown, KsClass::Keyword];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsDecision {
    /// 1 when the keyword is present.
    pub y: u8,
    pub class: KsClass,
    pub scores: [f32; 3],
}

impl KsDecision {
    /// Argmax over the three class scores, lowest index winning ties.
    pub fn from_scores(scores: [f32; 3]) -> Self {
        let mut best = 0;
        for i in 1..3 {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        let class = KsClass::ALL[best];
        Self {
            y: u8::from(class == KsClass::Keyword),
            class,
            scores,
        }
    }

    pub fn keyword(&self) -> bool {
        self.y == 1
    }
}

/// Anything that can label a spectrogram as silence, unknown or keyword.
pub trait KeywordModel: Send + Sync {
    fn classify(&self, spec: &Spectrogram) -> Result<KsDecision>;
}

/// A keyword spotter backed by a three-output weight bundle.
#[derive(Debug, Clone)]
pub struct KeywordSpotter {
    bundle: WeightBundle,
    softmax_in_bundle: bool,
}

impl KeywordSpotter {
    pub fn new(bundle: WeightBundle) -> Result<Self> {
        let out = bundle.output_len()?;
        if out != 3 {
            return Err(Error::Shape(format!(
                "keyword spotter must have 3 outputs, bundle '{}' has {out}",
                bundle.name
            )));
        }
        bundle.count_params()?;
        let softmax_in_bundle = bundle
            .layers
            .last()
            .is_some_and(|l| l.spec.activation == Activation::Softmax);
        Ok(Self {
            bundle,
            softmax_in_bundle,
        })
    }

    pub fn bundle(&self) -> &WeightBundle {
        &self.bundle
    }
}

impl KeywordModel for KeywordSpotter {
    fn classify(&self, spec: &Spectrogram) -> Result<KsDecision> {
        ks_classify_inner(&self.bundle, self.softmax_in_bundle, spec)
    }
}

pub(crate) fn spectrogram_tensor(bundle: &WeightBundle, spec: &Spectrogram) -> Result<Tensor> {
    bundle.fingerprint.ensure_matches(spec.fingerprint())?;
    Tensor::new(
        Shape::new(spec.bins(), spec.frames(), 1),
        spec.coefficients().to_vec(),
    )
}

fn ks_classify_inner(bundle: &WeightBundle, softmax_in_bundle: bool, spec: &Spectrogram) -> Result<KsDecision> {
    let input = spectrogram_tensor(bundle, spec)?;
    let mut out = bundle.run(&input)?;
    if out.len() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: out.len(),
        });
    }
    if !softmax_in_bundle {
        ops::softmax_in_place(&mut out);
    }
    Ok(KsDecision::from_scores([out[0], out[1], out[2]]))
}

/// Classifies one spectrogram with a keyword-spotting bundle.
pub fn ks_classify(bundle: &WeightBundle, spec: &Spectrogram) -> Result<KsDecision> {
    let softmax = bundle
        .layers
        .last()
        .is_some_and(|l| l.spec.activation == Activation::Softmax);
    ks_classify_inner(bundle, softmax, spec)
}
