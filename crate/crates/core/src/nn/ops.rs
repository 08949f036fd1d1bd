//! Layer kernels. Every kernel validates its parameter shapes and reports
//! problems as [`Error::Shape`]; the network runner attaches the layer index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Shape, Tensor};

pub const BATCHNORM_EPSILON: f32 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    None,
    Relu,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Same,
    Valid,
}

fn shape_err(detail: impl Into<String>) -> Error {
    Error::Shape(detail.into())
}

/// Output extent and leading pad for one spatial axis.
pub fn conv_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if kernel == 0 || stride == 0 {
        return Err(shape_err("kernel size and stride must be positive"));
    }
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out.saturating_sub(1)) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
        Padding::Valid => {
            if kernel > input {
                return Err(shape_err(format!(
                    "kernel {kernel} larger than input extent {input} with valid padding"
                )));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
    }
}

pub fn apply_activation(values: &mut [f32], activation: Activation) {
    match activation {
        Activation::None => {}
        Activation::Relu => {
            for v in values.iter_mut() {
                *v = v.max(0.0);
            }
        }
        Activation::Softmax => softmax_in_place(values),
    }
}

pub fn softmax_in_place(values: &mut [f32]) {
    let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// 2-D cross-correlation. `weights` are ordered
/// `(filter_row, filter_col, in_channel, out_channel)`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    input: &Tensor,
    rows: usize,
    cols: usize,
    filters: usize,
    stride: usize,
    padding: Padding,
    weights: &[f32],
    bias: &[f32],
    activation: Activation,
) -> Result<Tensor> {
    let Shape {
        height,
        width,
        channels,
    } = input.shape();
    if weights.len() != rows * cols * channels * filters {
        return Err(shape_err(format!(
            "conv2d expects {rows}x{cols}x{channels}x{filters} = {} weights, got {}",
            rows * cols * channels * filters,
            weights.len()
        )));
    }
    if bias.len() != filters {
        return Err(shape_err(format!(
            "conv2d expects {filters} biases, got {}",
            bias.len()
        )));
    }
    let (out_h, pad_top) = conv_extent(height, rows, stride, padding)?;
    let (out_w, pad_left) = conv_extent(width, cols, stride, padding)?;
    let mut out = Tensor::zeros(Shape::new(out_h, out_w, filters));
    let data = input.data();
    let out_data = out.data_mut();

    for oy in 0..out_h {
        for ox in 0..out_w {
            let acc = &mut out_data[(oy * out_w + ox) * filters..(oy * out_w + ox + 1) * filters];
            acc.copy_from_slice(bias);
            for ky in 0..rows {
                let iy = (oy * stride + ky) as isize - pad_top as isize;
                if iy < 0 || iy >= height as isize {
                    continue;
                }
                for kx in 0..cols {
                    let ix = (ox * stride + kx) as isize - pad_left as isize;
                    if ix < 0 || ix >= width as isize {
                        continue;
                    }
                    let in_base = (iy as usize * width + ix as usize) * channels;
                    let w_base = (ky * cols + kx) * channels * filters;
                    for c in 0..channels {
                        let x = data[in_base + c];
                        if x == 0.0 {
                            continue;
                        }
                        let w = &weights[w_base + c * filters..w_base + (c + 1) * filters];
                        for (a, wv) in acc.iter_mut().zip(w) {
                            *a += x * wv;
                        }
                    }
                }
            }
        }
    }
    apply_activation(out.data_mut(), activation);
    Ok(out)
}

/// Non-overlapping `pool x pool` max pooling; trailing rows/columns that do
/// not fill a pool are discarded.
pub fn maxpool2d(input: &Tensor, pool: usize) -> Result<Tensor> {
    let Shape {
        height,
        width,
        channels,
    } = input.shape();
    if pool == 0 {
        return Err(shape_err("pool size must be at least 1"));
    }
    if pool > height || pool > width {
        return Err(shape_err(format!(
            "pool {pool} larger than input {}",
            input.shape()
        )));
    }
    let (out_h, out_w) = (height / pool, width / pool);
    let mut out = Tensor::filled(Shape::new(out_h, out_w, channels), f32::NEG_INFINITY);
    for oy in 0..out_h {
        for ox in 0..out_w {
            for py in 0..pool {
                for px in 0..pool {
                    for c in 0..channels {
                        let v = input.at(oy * pool + py, ox * pool + px, c);
                        let idx = out.index(oy, ox, c);
                        let slot = &mut out.data_mut()[idx];
                        if v > *slot {
                            *slot = v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `out = input . weights + bias`, weights ordered `(input, unit)`.
pub fn dense(
    input: &[f32],
    units: usize,
    weights: &[f32],
    bias: &[f32],
    activation: Activation,
) -> Result<Vec<f32>> {
    if weights.len() != input.len() * units {
        return Err(shape_err(format!(
            "dense expects {}x{units} weights, got {}",
            input.len(),
            weights.len()
        )));
    }
    if bias.len() != units {
        return Err(shape_err(format!("dense expects {units} biases, got {}", bias.len())));
    }
    let mut out = bias.to_vec();
    for (x, row) in input.iter().zip(weights.chunks_exact(units)) {
        for (o, w) in out.iter_mut().zip(row) {
            *o += x * w;
        }
    }
    apply_activation(&mut out, activation);
    Ok(out)
}

/// Inference-mode batch normalisation. Parameters hold either one value
/// (shared by every element) or one value per channel.
pub fn batchnorm(
    input: &Tensor,
    gamma: &[f32],
    beta: &[f32],
    mean: &[f32],
    variance: &[f32],
) -> Result<Tensor> {
    let channels = input.shape().channels;
    let groups = gamma.len();
    if groups != 1 && groups != channels {
        return Err(shape_err(format!(
            "batchnorm has {groups} parameter groups for {channels} channels"
        )));
    }
    if [beta.len(), mean.len(), variance.len()].iter().any(|&l| l != groups) {
        return Err(shape_err("batchnorm parameter vectors differ in length"));
    }
    if let Some(v) = variance.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(shape_err(format!("batchnorm variance {v} is negative")));
    }
    let scale: Vec<f32> = gamma
        .iter()
        .zip(variance)
        .map(|(g, v)| g / (v + BATCHNORM_EPSILON).sqrt())
        .collect();
    let mut out = input.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let g = if groups == 1 { 0 } else { i % channels };
        *v = (*v - mean[g]) * scale[g] + beta[g];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_padding_extents() {
        assert_eq!(conv_extent(40, 8, 2, Padding::Same).unwrap().0, 20);
        assert_eq!(conv_extent(49, 20, 2, Padding::Same).unwrap().0, 25);
        assert_eq!(conv_extent(6, 3, 2, Padding::Same).unwrap().0, 3);
        assert_eq!(conv_extent(8, 3, 2, Padding::Same).unwrap().0, 4);
        assert_eq!(conv_extent(5, 3, 1, Padding::Valid).unwrap().0, 3);
        assert!(conv_extent(2, 3, 1, Padding::Valid).is_err());
    }

    #[test]
    fn table_one_first_conv_shape() {
        let input = Tensor::zeros(Shape::new(40, 49, 1));
        let out = conv2d(
            &input,
            8,
            20,
            16,
            2,
            Padding::Same,
            &vec![0.0; 8 * 20 * 16],
            &[0.0; 16],
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(out.shape(), Shape::new(20, 25, 16));
        assert_eq!(out.shape().len(), 8000);
    }

    #[test]
    fn identity_conv() {
        let input = Tensor::new(Shape::new(1, 1, 1), vec![-2.5]).unwrap();
        let out = conv2d(&input, 1, 1, 1, 1, Padding::Same, &[1.0], &[0.0], Activation::None).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn conv_weight_mismatch() {
        let input = Tensor::zeros(Shape::new(4, 4, 2));
        let err = conv2d(&input, 3, 3, 1, 1, Padding::Same, &[0.0; 9], &[0.0], Activation::None);
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn pooling_shapes() {
        let t = Tensor::filled(Shape::new(20, 25, 16), 3.0);
        let p = maxpool2d(&t, 2).unwrap();
        assert_eq!(p.shape(), Shape::new(10, 12, 16));
        assert!(p.data().iter().all(|v| *v == 3.0));
        let t = Tensor::zeros(Shape::new(40, 49, 8));
        assert_eq!(maxpool2d(&t, 3).unwrap().shape().len(), 1664);
        assert!(maxpool2d(&Tensor::zeros(Shape::new(2, 5, 1)), 3).is_err());
        assert!(maxpool2d(&t, 0).is_err());
    }

    #[test]
    fn dense_with_zero_weights_returns_bias() {
        let out = dense(&[1.0, 2.0, 3.0], 2, &[0.0; 6], &[0.5, -1.0], Activation::None).unwrap();
        assert_eq!(out, vec![0.5, -1.0]);
        assert!(dense(&[1.0], 2, &[0.0; 3], &[0.0; 2], Activation::None).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut v = vec![1.0, 2.0, 3.0, 1000.0];
        softmax_in_place(&mut v);
        assert!((v.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn batchnorm_identity_and_negative_variance() {
        let t = Tensor::new(Shape::new(1, 2, 1), vec![0.5, -4.0]).unwrap();
        let out = batchnorm(&t, &[1.0], &[0.0], &[0.0], &[1.0]).unwrap();
        let k = 1.0 / (1.0f32 + BATCHNORM_EPSILON).sqrt();
        assert_eq!(out.data(), &[0.5 * k, -4.0 * k]);
        assert!(batchnorm(&t, &[1.0], &[0.0], &[0.0], &[-1.0]).is_err());
    }
}
