use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asv::{DVector, Embedder};
use crate::dsp::{read_wav, MfccExtractor, StreamConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUtterance {
    pub path: PathBuf,
    pub speaker: String,
    pub keyword: bool,
    pub split: Split,
    pub samples: Vec<i16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub utterances: Vec<LabeledUtterance>,
    pub rejected: Vec<Rejection>,
    /// Speakers whose split sizes stray more than one utterance from the
    /// 68/16/16 proportions.
    pub split_warnings: Vec<String>,
}

/// Train/validation/test sizes for `total` utterances at 68/16/16.
pub fn split_counts(total: usize) -> (usize, usize, usize) {
    let val = (total as f64 * 0.16).round() as usize;
    let test = val;
    (total.saturating_sub(val + test), val, test)
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    path: String,
    speaker: String,
    keyword: String,
    #[serde(default)]
    split: Option<String>,
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(Error::InvalidConfig(format!("bad keyword flag '{other}'"))),
    }
}

/// Loads every manifest entry that is a mono 16-bit WAV of exactly one
/// window at the configured rate. Other files are reported, not loaded.
///
/// Manifest columns: `path,speaker,keyword,split`, paths relative to `root`.
/// An empty split is assigned per speaker in manifest order (train first).
pub fn load_dataset(root: impl AsRef<Path>, manifest: impl AsRef<Path>, cfg: &StreamConfig) -> Result<LoadedDataset> {
    let root = root.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest.as_ref())?;
    let rows: Vec<ManifestRow> = reader.deserialize().collect::<std::result::Result<_, _>>()?;

    let expected = cfg.window_samples();
    let mut out = LoadedDataset::default();
    let mut unsplit: Vec<usize> = Vec::new();
    for row in rows {
        let path = root.join(&row.path);
        let keyword = parse_bool(&row.keyword)?;
        let split = match row.split.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(s.parse::<Split>()?),
        };
        let samples = match read_wav(&path, cfg.sample_rate_hz) {
            Ok(s) => s,
            Err(e) => {
                out.rejected.push(Rejection {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if samples.len() != expected {
            out.rejected.push(Rejection {
                path,
                reason: format!("{} samples, expected {expected}", samples.len()),
            });
            continue;
        }
        if split.is_none() {
            unsplit.push(out.utterances.len());
        }
        out.utterances.push(LabeledUtterance {
            path,
            speaker: row.speaker,
            keyword,
            split: split.unwrap_or(Split::Train),
            samples,
        });
    }

    let mut by_speaker: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for i in unsplit {
        by_speaker.entry(out.utterances[i].speaker.clone()).or_default().push(i);
    }
    for idx in by_speaker.values() {
        let (train, val, _) = split_counts(idx.len());
        for (k, i) in idx.iter().enumerate() {
            out.utterances[*i].split = if k < train {
                Split::Train
            } else if k < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }

    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for u in &out.utterances {
        counts.entry(&u.speaker).or_default()[u.split as usize] += 1;
    }
    for (speaker, c) in counts {
        let (tr, va, te) = split_counts(c.iter().sum());
        let off = |a: usize, b: usize| a.abs_diff(b) > 1;
        if off(c[0], tr) || off(c[1], va) || off(c[2], te) {
            out.split_warnings.push(format!(
                "speaker {speaker}: train/val/test = {}/{}/{}, expected about {tr}/{va}/{te}",
                c[0], c[1], c[2]
            ));
        }
    }
    Ok(out)
}

/// A d-vector tagged with its speaker and split.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    pub speaker: String,
    pub split: Split,
    pub dvector: DVector,
}

/// Runs the front-end and the extractor over every utterance in parallel.
pub fn embed_dataset(
    utterances: &[LabeledUtterance],
    cfg: &StreamConfig,
    extractor: &dyn Embedder,
) -> Result<Vec<Embedded>> {
    let mfcc = MfccExtractor::new(cfg)?;
    utterances
        .par_iter()
        .map(|u| {
            let spec = mfcc.extract_samples(&u.samples)?;
            Ok(Embedded {
                speaker: u.speaker.clone(),
                split: u.split,
                dvector: extractor.embed(&spec)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_four_split_as_64_15_15() {
        assert_eq!(split_counts(94), (64, 15, 15));
        assert_eq!(split_counts(0), (0, 0, 0));
    }
}
