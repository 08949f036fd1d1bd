use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::{self, Activation, Padding};
use crate::nn::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    /// `groups` is 1 (one shared set of statistics) or the channel count.
    Batchnorm { groups: usize },
    Conv2d {
        rows: usize,
        cols: usize,
        filters: usize,
        stride: usize,
        padding: Padding,
    },
    Maxpool2d { pool: usize },
    Flatten,
    Dense { units: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    #[serde(default)]
    pub activation: Activation,
}

impl LayerSpec {
    pub fn batchnorm() -> Self {
        Self {
            kind: LayerKind::Batchnorm { groups: 1 },
            activation: Activation::None,
        }
    }

    pub fn conv2d(rows: usize, cols: usize, filters: usize, stride: usize) -> Self {
        Self {
            kind: LayerKind::Conv2d {
                rows,
                cols,
                filters,
                stride,
                padding: Padding::Same,
            },
            activation: Activation::Relu,
        }
    }

    pub fn maxpool2d(pool: usize) -> Self {
        Self {
            kind: LayerKind::Maxpool2d { pool },
            activation: Activation::None,
        }
    }

    pub fn flatten() -> Self {
        Self {
            kind: LayerKind::Flatten,
            activation: Activation::None,
        }
    }

    pub fn dense(units: usize) -> Self {
        Self {
            kind: LayerKind::Dense { units },
            activation: Activation::None,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        if let LayerKind::Conv2d { padding: p, .. } = &mut self.kind {
            *p = padding;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Shape(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        match self.kind {
            LayerKind::Batchnorm { groups } => positive("groups", groups),
            LayerKind::Conv2d {
                rows,
                cols,
                filters,
                stride,
                ..
            } => {
                positive("r", rows)?;
                positive("q", cols)?;
                positive("m", filters)?;
                positive("s", stride)
            }
            LayerKind::Maxpool2d { pool } => positive("pool", pool),
            LayerKind::Flatten => Ok(()),
            LayerKind::Dense { units } => positive("a", units),
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        self.validate()?;
        match self.kind {
            LayerKind::Batchnorm { groups } => {
                if groups != 1 && groups != input.channels {
                    return Err(Error::Shape(format!(
                        "batchnorm groups {groups} incompatible with {input}"
                    )));
                }
                Ok(input)
            }
            LayerKind::Conv2d {
                rows,
                cols,
                filters,
                stride,
                padding,
            } => {
                let (h, _) = ops::conv_extent(input.height, rows, stride, padding)?;
                let (w, _) = ops::conv_extent(input.width, cols, stride, padding)?;
                Ok(Shape::new(h, w, filters))
            }
            LayerKind::Maxpool2d { pool } => {
                if pool > input.height || pool > input.width {
                    return Err(Error::Shape(format!("pool {pool} larger than input {input}")));
                }
                Ok(Shape::new(input.height / pool, input.width / pool, input.channels))
            }
            LayerKind::Flatten => Ok(Shape::flat(input.len())),
            LayerKind::Dense { units } => Ok(Shape::flat(units)),
        }
    }

    /// Named parameter tensors and their shapes for a given input shape.
    pub fn param_shapes(&self, input: Shape) -> Vec<(&'static str, Vec<usize>)> {
        match self.kind {
            LayerKind::Batchnorm { groups } => ["gamma", "beta", "mean", "variance"]
                .into_iter()
                .map(|n| (n, vec![groups]))
                .collect(),
            LayerKind::Conv2d {
                rows,
                cols,
                filters,
                ..
            } => vec![
                ("kernel", vec![rows, cols, input.channels, filters]),
                ("bias", vec![filters]),
            ],
            LayerKind::Dense { units } => vec![
                ("kernel", vec![input.len(), units]),
                ("bias", vec![units]),
            ],
            LayerKind::Maxpool2d { .. } | LayerKind::Flatten => Vec::new(),
        }
    }

    /// Weight count (omega) for a given input shape.
    pub fn weight_count(&self, input: Shape) -> usize {
        self.param_shapes(input)
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            LayerKind::Batchnorm { .. } => "BatchNorm",
            LayerKind::Conv2d { .. } => "Conv2D",
            LayerKind::Maxpool2d { .. } => "MP 2D",
            LayerKind::Flatten => "Flatten",
            LayerKind::Dense { .. } => "Dense",
        }
    }

    /// Hyperparameter column as printed in an architecture table.
    pub fn hyperparameters(&self) -> String {
        match self.kind {
            LayerKind::Batchnorm { .. } | LayerKind::Flatten => "-".into(),
            LayerKind::Conv2d {
                rows,
                cols,
                filters,
                stride,
                ..
            } => format!("r={rows}, q={cols}, m={filters}, s={stride}"),
            LayerKind::Maxpool2d { pool } => format!("{pool}x{pool}"),
            LayerKind::Dense { units } => format!("a = {units}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// A layer spec together with its parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Vec<Param>,
}

impl Layer {
    /// Builds a layer whose parameters are filled by `init(name, index)`.
    pub fn with_init(
        spec: LayerSpec,
        input: Shape,
        mut init: impl FnMut(&str, usize) -> f32,
    ) -> Self {
        let params = spec
            .param_shapes(input)
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                Param {
                    name: name.to_string(),
                    data: (0..len).map(|i| init(name, i)).collect(),
                    shape,
                }
            })
            .collect();
        Self { spec, params }
    }

    pub fn param(&self, name: &str) -> Result<&[f32]> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.data.as_slice())
            .ok_or_else(|| Error::Shape(format!("missing parameter tensor '{name}'")))
    }

    pub fn weight_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Checks parameter names and shapes against the spec for `input`.
    pub fn check_params(&self, input: Shape) -> Result<()> {
        let expected = self.spec.param_shapes(input);
        if expected.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "{} expects {} parameter tensors, found {}",
                self.spec.kind_name(),
                expected.len(),
                self.params.len()
            )));
        }
        for ((name, shape), param) in expected.iter().zip(&self.params) {
            if param.name != *name || param.shape != *shape {
                return Err(Error::Shape(format!(
                    "parameter '{}' {:?} does not match expected '{name}' {shape:?}",
                    param.name, param.shape
                )));
            }
            if param.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!("parameter '{name}' has wrong element count")));
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let out = match self.spec.kind {
            LayerKind::Batchnorm { .. } => ops::batchnorm(
                input,
                self.param("gamma")?,
                self.param("beta")?,
                self.param("mean")?,
                self.param("variance")?,
            )
            .map(|mut t| {
                ops::apply_activation(t.data_mut(), self.spec.activation);
                t
            })?,
            LayerKind::Conv2d {
                rows,
                cols,
                filters,
                stride,
                padding,
            } => ops::conv2d(
                input,
                rows,
                cols,
                filters,
                stride,
                padding,
                self.param("kernel")?,
                self.param("bias")?,
                self.spec.activation,
            )?,
            LayerKind::Maxpool2d { pool } => {
                let mut t = ops::maxpool2d(input, pool)?;
                ops::apply_activation(t.data_mut(), self.spec.activation);
                t
            }
            LayerKind::Flatten => {
                let mut t = input.clone().reshape(Shape::flat(input.shape().len()))?;
                ops::apply_activation(t.data_mut(), self.spec.activation);
                t
            }
            LayerKind::Dense { units } => {
                let v = ops::dense(
                    input.data(),
                    units,
                    self.param("kernel")?,
                    self.param("bias")?,
                    self.spec.activation,
                )?;
                Tensor::new(Shape::flat(units), v)?
            }
        };
        if !out.is_finite() {
            return Err(Error::Shape("layer produced non-finite activations".into()));
        }
        Ok(out)
    }
}
