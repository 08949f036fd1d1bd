//! Straightforward reference implementations and stub models shared by the
//! integration tests. Everything here is written for clarity, not speed, and
//! deliberately avoids the library's own helpers.
#![allow(dead_code, clippy::too_many_arguments, clippy::manual_div_ceil)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use tinysv::asv::{DVector, Embedder};
use tinysv::dsp::Spectrogram;
use tinysv::ks::{KeywordModel, KsDecision};

/// A plain `(h, w, c)` array with explicit zero padding helpers.
#[derive(Debug, Clone)]
pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub v: Vec<f64>,
}

impl Grid {
    pub fn from_f32(h: usize, w: usize, c: usize, v: &[f32]) -> Self {
        Self {
            h,
            w,
            c,
            v: v.iter().map(|x| f64::from(*x)).collect(),
        }
    }

    pub fn get(&self, y: i64, x: i64, ch: usize) -> f64 {
        if y < 0 || x < 0 || y >= self.h as i64 || x >= self.w as i64 {
            0.0
        } else {
            self.v[(y as usize * self.w + x as usize) * self.c + ch]
        }
    }
}

/// Same-padded strided convolution spelled out from first principles:
/// output extent ceil(n / s), total padding split with the smaller half first.
pub fn naive_conv_same(
    input: &Grid,
    rows: usize,
    cols: usize,
    filters: usize,
    stride: usize,
    weights: &[f32],
    bias: &[f32],
    relu: bool,
) -> Grid {
    let out_h = (input.h + stride - 1) / stride;
    let out_w = (input.w + stride - 1) / stride;
    let need_h = (out_h - 1) * stride + rows;
    let need_w = (out_w - 1) * stride + cols;
    let pad_top = if need_h > input.h { (need_h - input.h) / 2 } else { 0 };
    let pad_left = if need_w > input.w { (need_w - input.w) / 2 } else { 0 };
    let mut out = vec![0.0; out_h * out_w * filters];
    for oy in 0..out_h {
        for ox in 0..out_w {
            for m in 0..filters {
                let mut s = f64::from(bias[m]);
                for r in 0..rows {
                    for q in 0..cols {
                        for ch in 0..input.c {
                            let y = (oy * stride + r) as i64 - pad_top as i64;
                            let x = (ox * stride + q) as i64 - pad_left as i64;
                            let wi = ((r * cols + q) * input.c + ch) * filters + m;
                            s += input.get(y, x, ch) * f64::from(weights[wi]);
                        }
                    }
                }
                if relu && s < 0.0 {
                    s = 0.0;
                }
                out[(oy * out_w + ox) * filters + m] = s;
            }
        }
    }
    Grid {
        h: out_h,
        w: out_w,
        c: filters,
        v: out,
    }
}

pub fn naive_maxpool(input: &Grid, pool: usize) -> Grid {
    let (oh, ow) = (input.h / pool, input.w / pool);
    let mut v = Vec::with_capacity(oh * ow * input.c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..input.c {
                let mut best = f64::NEG_INFINITY;
                for dy in 0..pool {
                    for dx in 0..pool {
                        best = best.max(input.get((oy * pool + dy) as i64, (ox * pool + dx) as i64, ch));
                    }
                }
                v.push(best);
            }
        }
    }
    Grid {
        h: oh,
        w: ow,
        c: input.c,
        v,
    }
}

pub fn naive_dense(input: &[f32], units: usize, weights: &[f32], bias: &[f32]) -> Vec<f64> {
    (0..units)
        .map(|u| {
            f64::from(bias[u])
                + input
                    .iter()
                    .enumerate()
                    .map(|(i, x)| f64::from(*x) * f64::from(weights[i * units + u]))
                    .sum::<f64>()
        })
        .collect()
}

pub fn naive_softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn naive_batchnorm(input: &Grid, gamma: &[f32], beta: &[f32], mean: &[f32], var: &[f32]) -> Grid {
    let pick = |p: &[f32], ch: usize| f64::from(if p.len() == 1 { p[0] } else { p[ch] });
    let mut out = input.clone();
    for (i, x) in out.v.iter_mut().enumerate() {
        let ch = i % input.c;
        *x = pick(gamma, ch) * (*x - pick(mean, ch)) / (pick(var, ch) + 0.001).sqrt() + pick(beta, ch);
    }
    out
}

/// Number of frame starts `s` with `s + frame_len <= window_len`, counted by
/// walking the window.
pub fn enumerate_frames(window_len: usize, frame_len: usize, stride: usize) -> usize {
    let mut count = 0;
    let mut start = 0;
    while start + frame_len <= window_len {
        count += 1;
        start += stride;
    }
    count
}

/// Mann-Whitney statistic over every genuine/impostor pair, ties counted half.
pub fn pairwise_auc(genuine: &[f64], impostor: &[f64]) -> f64 {
    let mut wins = 0.0;
    for g in genuine {
        for i in impostor {
            if g > i {
                wins += 1.0;
            } else if g == i {
                wins += 0.5;
            }
        }
    }
    wins / (genuine.len() * impostor.len()) as f64
}

/// Error rates at threshold `t` (accept iff score > t), by direct counting.
pub fn rates_at(genuine: &[f64], impostor: &[f64], t: f64) -> (f64, f64) {
    let fa = impostor.iter().filter(|s| **s > t).count() as f64 / impostor.len() as f64;
    let fr = genuine.iter().filter(|s| **s <= t).count() as f64 / genuine.len() as f64;
    (fa, fr)
}

/// Sweeps every candidate threshold and intersects the (FPR, FNR) polyline
/// with the diagonal. Returns (EER, threshold of the closest point).
pub fn sweep_eer(genuine: &[f64], impostor: &[f64]) -> (f64, f64) {
    let mut ts: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ts.dedup();
    ts.push(f64::NEG_INFINITY);
    let pts: Vec<(f64, f64, f64)> = ts
        .iter()
        .map(|t| {
            let (fa, fr) = rates_at(genuine, impostor, *t);
            (*t, fa, fr)
        })
        .collect();

    // Compare |FPR - FNR| as exact fractions via raw counts.
    let (ng, ni) = (genuine.len() as i64, impostor.len() as i64);
    let mut best_t = pts[0].0;
    let mut best_gap = i64::MAX;
    for t in &ts {
        let fa = impostor.iter().filter(|s| **s > *t).count() as i64;
        let fr = genuine.iter().filter(|s| **s <= *t).count() as i64;
        let gap = (fa * ng - fr * ni).abs();
        if gap < best_gap || (gap == best_gap && *t < best_t) {
            best_gap = gap;
            best_t = *t;
        }
    }

    if let Some((_, fa, _)) = pts.iter().find(|(_, fa, fr)| fa == fr) {
        return (*fa, best_t);
    }
    for w in pts.windows(2) {
        let (x0, y0) = (w[0].1, w[0].2);
        let (x1, y1) = (w[1].1, w[1].2);
        if x0 < y0 && x1 > y1 {
            // Segment (x0,y0)-(x1,y1) meets y = x at parameter u.
            let u = (y0 - x0) / ((x1 - x0) - (y1 - y0));
            return (x0 + u * (x1 - x0), best_t);
        }
    }
    unreachable!("the polyline always crosses the diagonal")
}

/// Keyword iff the first coefficient of the first frame exceeds `level`.
pub struct LevelSpotter(pub f32);

impl KeywordModel for LevelSpotter {
    fn classify(&self, spec: &Spectrogram) -> tinysv::Result<KsDecision> {
        let loud = spec.get(0, 0) > self.0;
        Ok(KsDecision::from_scores(if loud {
            [0.1, 0.2, 0.7]
        } else {
            [0.7, 0.2, 0.1]
        }))
    }
}

/// Embeds a spectrogram as its first `dim` cepstral values of frame 0 and
/// counts its invocations.
pub struct CepstrumEmbedder {
    pub dim: usize,
    pub calls: Arc<AtomicUsize>,
}

impl CepstrumEmbedder {
    pub fn new(dim: usize) -> (Self, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            Self {
                dim,
                calls: calls.clone(),
            },
            calls,
        )
    }
}

impl Embedder for CepstrumEmbedder {
    fn embed(&self, spec: &Spectrogram) -> tinysv::Result<DVector> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        DVector::new((0..self.dim).map(|b| spec.get(b, 0)).collect())
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Returns a fixed vector chosen by the loudness of the window's first
/// sample region: loud windows get `a`, quieter keyword windows get `b`.
pub struct TwoVoiceEmbedder {
    pub split_level: f32,
    pub a: Vec<f32>,
    pub b: Vec<f32>,
}

impl Embedder for TwoVoiceEmbedder {
    fn embed(&self, spec: &Spectrogram) -> tinysv::Result<DVector> {
        DVector::new(if spec.get(0, 0) > self.split_level {
            self.a.clone()
        } else {
            self.b.clone()
        })
    }

    fn dim(&self) -> usize {
        self.a.len()
    }
}

/// A constant-amplitude one-second window.
pub fn flat_window(level: i16, index: u64) -> tinysv::dsp::AudioWindow {
    tinysv::dsp::AudioWindow::new(vec![level; 16_000], index * 4_000, 16_000)
}
