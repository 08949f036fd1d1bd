//! Weight bundles and the `.twb` container.
//!
//! Layout: the magic `TWB1`, a little-endian `u32` format version, a
//! little-endian `u64` header length, the JSON header, then raw little-endian
//! `f32` tensor data. Tensor offsets in the header are byte offsets into the
//! data section. Kernels are stored `(filter_row, filter_col, in_channel,
//! out_channel)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::FrontEndFingerprint;
use crate::error::{Error, Result};
use crate::nn::{Layer, LayerSpec, Param, Shape, Tensor};

pub const MAGIC: &[u8; 4] = b"TWB1";
pub const FORMAT_VERSION: u32 = 1;

/// Activation and weight counts for one row of an architecture table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCount {
    pub label: String,
    pub hyperparameters: String,
    pub alpha: usize,
    pub omega: usize,
}

/// Per-layer counts (the input row first) and network totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub rows: Vec<LayerCount>,
    pub total_alpha: usize,
    pub total_omega: usize,
}

impl ParamCounts {
    /// Plain-text table in the usual `l | Hyperparameters | alpha | omega` layout.
    pub fn table(&self, title: &str) -> String {
        let mut out = String::new();
        if !title.is_empty() {
            let _ = writeln!(out, "{title}");
        }
        let _ = writeln!(out, "{:<10} | {:<28} | {:>7} | {:>7}", "l", "Hyperparameters", "alpha", "omega");
        let _ = writeln!(out, "{}", "-".repeat(61));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} | {:<28} | {:>7} | {:>7}",
                r.label, r.hyperparameters, r.alpha, r.omega
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(61));
        let _ = writeln!(
            out,
            "{:<10} | {:<28} | {:>7} | {:>7}",
            "Tot.",
            "",
            group_thousands(self.total_alpha),
            group_thousands(self.total_omega)
        );
        out
    }
}

pub(crate) fn group_thousands(v: usize) -> String {
    let digits = v.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// An immutable network: layer specs, parameters, declared counts and the
/// front-end the network was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub name: String,
    pub fingerprint: FrontEndFingerprint,
    pub input_shape: Shape,
    pub layers: Vec<Layer>,
    /// Counts recorded at export; checked against the layers on load.
    pub declared: ParamCounts,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Peak transient activation memory seen during one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub peak_activation_bytes: usize,
}

impl WeightBundle {
    /// Assembles a bundle and records its computed counts as the declared ones.
    pub fn new(
        name: impl Into<String>,
        fingerprint: FrontEndFingerprint,
        input_shape: Shape,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        let mut bundle = Self {
            name: name.into(),
            fingerprint,
            input_shape,
            layers,
            declared: ParamCounts {
                rows: Vec::new(),
                total_alpha: 0,
                total_omega: 0,
            },
            metadata: BTreeMap::new(),
        };
        bundle.declared = bundle.compute_counts()?;
        Ok(bundle)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        self.layers
            .iter()
            .enumerate()
            .try_fold(self.input_shape, |shape, (i, l)| {
                l.spec.output_shape(shape).map_err(|e| Error::Layer {
                    layer: i,
                    detail: e.to_string(),
                })
            })
    }

    pub fn output_len(&self) -> Result<usize> {
        self.output_shape().map(|s| s.len())
    }

    /// Counts derived from the layer specs and stored tensors.
    ///
    /// The input row contributes its activation count; an empty bundle
    /// (no layers, empty input) totals zero.
    pub fn compute_counts(&self) -> Result<ParamCounts> {
        let mut rows = Vec::with_capacity(self.layers.len() + 1);
        if !self.input_shape.is_empty() || !self.layers.is_empty() {
            rows.push(LayerCount {
                label: "Input".into(),
                hyperparameters: "-".into(),
                alpha: self.input_shape.len(),
                omega: 0,
            });
        }
        let mut shape = self.input_shape;
        for (i, layer) in self.layers.iter().enumerate() {
            let wrap = |e: Error| Error::Layer {
                layer: i,
                detail: e.to_string(),
            };
            layer.check_params(shape).map_err(wrap)?;
            let out = layer.spec.output_shape(shape).map_err(wrap)?;
            rows.push(LayerCount {
                label: layer.spec.kind_name().into(),
                hyperparameters: layer.spec.hyperparameters(),
                alpha: out.len(),
                omega: layer.weight_count(),
            });
            shape = out;
        }
        Ok(ParamCounts {
            total_alpha: rows.iter().map(|r| r.alpha).sum(),
            total_omega: rows.iter().map(|r| r.omega).sum(),
            rows,
        })
    }

    /// Recomputes counts and checks them against the declared ones.
    pub fn count_params(&self) -> Result<ParamCounts> {
        let computed = self.compute_counts()?;
        if computed.rows.len() != self.declared.rows.len() {
            return Err(Error::Integrity {
                layer: "bundle".into(),
                detail: format!(
                    "{} declared rows for {} computed",
                    self.declared.rows.len(),
                    computed.rows.len()
                ),
            });
        }
        for (i, (c, d)) in computed.rows.iter().zip(&self.declared.rows).enumerate() {
            if c.alpha != d.alpha || c.omega != d.omega {
                return Err(Error::Integrity {
                    layer: format!("row {i} ({})", c.label),
                    detail: format!(
                        "declared alpha={} omega={}, computed alpha={} omega={}",
                        d.alpha, d.omega, c.alpha, c.omega
                    ),
                });
            }
        }
        let declared_alpha: usize = self.declared.rows.iter().map(|r| r.alpha).sum();
        let declared_omega: usize = self.declared.rows.iter().map(|r| r.omega).sum();
        if declared_alpha != self.declared.total_alpha || declared_omega != self.declared.total_omega {
            return Err(Error::Integrity {
                layer: "totals".into(),
                detail: format!(
                    "declared totals alpha={} omega={} but rows sum to alpha={declared_alpha} omega={declared_omega}",
                    self.declared.total_alpha, self.declared.total_omega
                ),
            });
        }
        Ok(computed)
    }

    pub fn run(&self, input: &Tensor) -> Result<Vec<f32>> {
        self.run_with_stats(input).map(|(v, _)| v)
    }

    /// Forward pass. Only the current input and output activations are alive
    /// at any time.
    pub fn run_with_stats(&self, input: &Tensor) -> Result<(Vec<f32>, RunStats)> {
        if input.shape() != self.input_shape {
            return Err(Error::Layer {
                layer: 0,
                detail: format!(
                    "input shape {} does not match bundle input {}",
                    input.shape(),
                    self.input_shape
                ),
            });
        }
        let mut stats = RunStats::default();
        let mut current: Option<Tensor> = None;
        for (i, layer) in self.layers.iter().enumerate() {
            let src = current.as_ref().unwrap_or(input);
            let out = layer.forward(src).map_err(|e| Error::Layer {
                layer: i,
                detail: e.to_string(),
            })?;
            stats.peak_activation_bytes = stats
                .peak_activation_bytes
                .max((src.shape().len() + out.shape().len()) * std::mem::size_of::<f32>());
            current = Some(out);
        }
        let out = current.unwrap_or_else(|| input.clone());
        Ok((out.into_data(), stats))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut blob: Vec<u8> = Vec::new();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (layer, row) in self.layers.iter().zip(self.declared.rows.iter().skip(1)) {
            let tensors = layer
                .params
                .iter()
                .map(|p| {
                    let entry = TensorEntry {
                        name: p.name.clone(),
                        shape: p.shape.clone(),
                        offset: blob.len(),
                        len: p.data.len(),
                    };
                    for v in &p.data {
                        blob.extend_from_slice(&v.to_le_bytes());
                    }
                    entry
                })
                .collect();
            layers.push(LayerHeader {
                spec: layer.spec,
                alpha: row.alpha,
                omega: row.omega,
                tensors,
            });
        }
        let header = Header {
            format_version: FORMAT_VERSION,
            name: self.name.clone(),
            fingerprint: self.fingerprint.clone(),
            input_shape: [
                self.input_shape.height,
                self.input_shape.width,
                self.input_shape.channels,
            ],
            input_alpha: self.declared.rows.first().map_or(0, |r| r.alpha),
            layers,
            total_alpha: self.declared.total_alpha,
            total_omega: self.declared.total_omega,
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec_pretty(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        w.write_all(&blob)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Parses a container and verifies tensor shapes and declared counts.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing TWB1 magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header_end = 16usize
            .checked_add(header_len)
            .filter(|e| *e <= bytes.len())
            .ok_or_else(|| Error::Format("header length exceeds file size".into()))?;
        let header: Header = serde_json::from_slice(&bytes[16..header_end])?;
        if header.format_version != version {
            return Err(Error::Format("header and container versions disagree".into()));
        }
        let blob = &bytes[header_end..];

        let input_shape = Shape::new(header.input_shape[0], header.input_shape[1], header.input_shape[2]);
        let mut rows = Vec::with_capacity(header.layers.len() + 1);
        if !input_shape.is_empty() || !header.layers.is_empty() {
            rows.push(LayerCount {
                label: "Input".into(),
                hyperparameters: "-".into(),
                alpha: header.input_alpha,
                omega: 0,
            });
        }
        let mut layers = Vec::with_capacity(header.layers.len());
        for (i, lh) in header.layers.into_iter().enumerate() {
            let mut params = Vec::with_capacity(lh.tensors.len());
            for t in lh.tensors {
                if t.shape.iter().product::<usize>() != t.len {
                    return Err(Error::Format(format!(
                        "layer {i} tensor '{}' shape {:?} disagrees with length {}",
                        t.name, t.shape, t.len
                    )));
                }
                let end = t
                    .len
                    .checked_mul(4)
                    .and_then(|n| n.checked_add(t.offset))
                    .filter(|e| *e <= blob.len())
                    .ok_or_else(|| {
                        Error::Format(format!("layer {i} tensor '{}' runs past end of data", t.name))
                    })?;
                let data = blob[t.offset..end]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect();
                params.push(Param {
                    name: t.name,
                    shape: t.shape,
                    data,
                });
            }
            rows.push(LayerCount {
                label: lh.spec.kind_name().into(),
                hyperparameters: lh.spec.hyperparameters(),
                alpha: lh.alpha,
                omega: lh.omega,
            });
            layers.push(Layer { spec: lh.spec, params });
        }
        let bundle = Self {
            name: header.name,
            fingerprint: header.fingerprint,
            input_shape,
            layers,
            declared: ParamCounts {
                rows,
                total_alpha: header.total_alpha,
                total_omega: header.total_omega,
            },
            metadata: header.metadata,
        };
        bundle.count_params()?;
        Ok(bundle)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    name: String,
    fingerprint: FrontEndFingerprint,
    input_shape: [usize; 3],
    input_alpha: usize,
    layers: Vec<LayerHeader>,
    total_alpha: usize,
    total_omega: usize,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerHeader {
    #[serde(flatten)]
    spec: LayerSpec,
    alpha: usize,
    omega: usize,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

/// Applies every layer of `bundle` to `input` in order.
pub fn run_network(bundle: &WeightBundle, input: &Tensor) -> Result<Vec<f32>> {
    bundle.run(input)
}

/// Per-layer and total (alpha, omega), verified against the declared counts.
pub fn count_params(bundle: &WeightBundle) -> Result<ParamCounts> {
    bundle.count_params()
}
