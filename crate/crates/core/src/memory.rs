//! Closed-form memory estimates for every pipeline component, checked
//! against a byte budget before models are loaded.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsp::StreamConfig;
use crate::error::{Error, Result};
use crate::nn::WeightBundle;

/// Bytes per stored PCM sample.
pub const PCM_BYTES: usize = 2;
/// Bytes per stored float (spectrograms, d-vectors, weights, activations).
pub const FLOAT_BYTES: usize = 4;
/// 1 MiB of SRAM.
pub const DEFAULT_LIMIT_BYTES: usize = 1_048_576;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryComponent {
    pub name: String,
    pub formula: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub input_window: usize,
    pub spectrogram: usize,
    pub dvector: usize,
    pub ks_weights: usize,
    pub ks_activations: usize,
    pub fx_weights: usize,
    pub fx_activations: usize,
    pub enrollment: usize,
    pub limit: usize,
}

impl MemoryBudget {
    pub fn components(&self) -> Vec<MemoryComponent> {
        let c = |name: &str, formula: &str, bytes| MemoryComponent {
            name: name.into(),
            formula: formula.into(),
            bytes,
        };
        vec![
            c("I_t", "(f_r x W) x b1", self.input_window),
            c("P_t", "(i x j) x b", self.spectrogram),
            c("D_t", "d x b", self.dvector),
            c("Phi_k weights", "omega_k x b", self.ks_weights),
            c("Phi_k act.", "alpha_k x b", self.ks_activations),
            c("Phi_f weights", "omega_f x b", self.fx_weights),
            c("Phi_f act.", "alpha_f x b", self.fx_activations),
            c("Phi_c", "(d x n) x b", self.enrollment),
        ]
    }

    pub fn total(&self) -> usize {
        self.components().iter().map(|c| c.bytes).sum()
    }

    pub fn within_limit(&self) -> bool {
        self.total() <= self.limit
    }

    /// Fails with the components listed largest first when over the limit.
    pub fn check(&self) -> Result<()> {
        if self.within_limit() {
            return Ok(());
        }
        let mut parts = self.components();
        parts.sort_by_key(|c| std::cmp::Reverse(c.bytes));
        let offenders = parts
            .iter()
            .map(|c| format!("{} {} B", c.name, c.bytes))
            .collect::<Vec<_>>()
            .join(", ");
        Err(Error::BudgetExceeded {
            total: self.total(),
            limit: self.limit,
            offenders,
        })
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} | {:<16} | {:>9} | {:>9}", "Component", "Formula", "bytes", "KiB");
        let _ = writeln!(out, "{}", "-".repeat(58));
        for c in self.components() {
            let _ = writeln!(
                out,
                "{:<14} | {:<16} | {:>9} | {:>9.2}",
                c.name,
                c.formula,
                c.bytes,
                c.bytes as f64 / 1024.0
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(58));
        let _ = writeln!(
            out,
            "{:<14} | {:<16} | {:>9} | {:>9.2}",
            "Total",
            format!("limit {}", self.limit),
            self.total(),
            self.total() as f64 / 1024.0
        );
        out
    }
}

/// Estimates from raw counts; no budget check.
#[allow(clippy::too_many_arguments)]
pub fn estimate_from_counts(
    cfg: &StreamConfig,
    ks_counts: (usize, usize),
    fx_counts: (usize, usize),
    dim: usize,
    n: usize,
    limit: usize,
) -> Result<MemoryBudget> {
    let frames = cfg.frame_count()?;
    let (ks_alpha, ks_omega) = ks_counts;
    let (fx_alpha, fx_omega) = fx_counts;
    Ok(MemoryBudget {
        input_window: cfg.window_samples() * PCM_BYTES,
        spectrogram: cfg.num_mel_bins * frames * FLOAT_BYTES,
        dvector: dim * FLOAT_BYTES,
        ks_weights: ks_omega * FLOAT_BYTES,
        ks_activations: ks_alpha * FLOAT_BYTES,
        fx_weights: fx_omega * FLOAT_BYTES,
        fx_activations: fx_alpha * FLOAT_BYTES,
        enrollment: dim * n * FLOAT_BYTES,
        limit,
    })
}

/// Estimates memory for a pipeline built from the two bundles with an
/// enrollment capacity of `n`, and refuses it when the total exceeds `limit`.
pub fn estimate_memory(
    cfg: &StreamConfig,
    ks: &WeightBundle,
    fx: &WeightBundle,
    n: usize,
    limit: usize,
) -> Result<MemoryBudget> {
    let ks_counts = ks.count_params()?;
    let fx_counts = fx.count_params()?;
    let budget = estimate_from_counts(
        cfg,
        (ks_counts.total_alpha, ks_counts.total_omega),
        (fx_counts.total_alpha, fx_counts.total_omega),
        fx.output_len()?,
        n,
        limit,
    )?;
    budget.check()?;
    Ok(budget)
}
