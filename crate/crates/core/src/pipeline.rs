//! The keyword-gated cascade.
//!
//! Every window goes through the MFCC front-end and the keyword spotter.
//! Only keyword windows reach the d-vector extractor; while the enrollment
//! set is filling they are enrolled, afterwards they are verified:
//!
//! | x | meaning                                   |
//! |---|-------------------------------------------|
//! | 0 | no keyword (or the window was enrolled)   |
//! | 1 | keyword spoken by someone else            |
//! | 2 | keyword spoken by the enrolled speaker    |
//!
//! After a keyword window the next `refractory_hops` windows are not
//! treated as keyword windows, so one utterance seen through several
//! overlapping windows yields one event.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::asv::{self, DVectorExtractor, Embedder, EnrollmentSet, Progress, DEFAULT_THRESHOLD};
use crate::dsp::{AudioWindow, MfccExtractor, StreamConfig};
use crate::error::{Error, Result};
use crate::ks::{KeywordModel, KeywordSpotter, KsDecision};
use crate::memory::{self, MemoryBudget};
use crate::nn::WeightBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stream: StreamConfig,
    /// Enrollment utterances collected before verification starts.
    pub enrollment_size: usize,
    pub threshold: f32,
    pub refractory_hops: usize,
    pub memory_limit_bytes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stream: StreamConfig::default(),
            enrollment_size: 16,
            threshold: DEFAULT_THRESHOLD,
            refractory_hops: 2,
            memory_limit_bytes: memory::DEFAULT_LIMIT_BYTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Enrolling,
    Inferring,
}

/// Everything known about one window beyond its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDetail {
    pub mode: Mode,
    /// Gated keyword label after the refractory rule.
    pub y: u8,
    pub ks: KsDecision,
    /// The spotter fired but the window fell inside the refractory period.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub suppressed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub progress: Option<Progress>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEvent {
    /// Window start time in seconds from the stream origin.
    pub t: f64,
    pub x: u8,
    pub detail: EventDetail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    SetThreshold(f32),
    ResetEnrollment,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub windows: u64,
    pub keyword_windows: u64,
    pub embeddings: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowTimings {
    pub mfcc: Duration,
    pub keyword: Duration,
    pub embedding: Duration,
}

impl WindowTimings {
    pub fn total(&self) -> Duration {
        self.mfcc + self.keyword + self.embedding
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    mfcc: MfccExtractor,
    ks: Box<dyn KeywordModel>,
    fx: Box<dyn Embedder>,
    enrollment: EnrollmentSet,
    mode: Mode,
    refractory_remaining: usize,
    budget: Option<MemoryBudget>,
    pending: VecDeque<Command>,
    stats: PipelineStats,
    last_timings: WindowTimings,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("mode", &self.mode)
            .field("enrolled", &self.enrollment.len())
            .field("threshold", &self.enrollment.threshold())
            .field("stats", &self.stats)
            .finish()
    }
}

impl Pipeline {
    /// Loads both networks after checking their front-end fingerprints and the
    /// memory budget.
    pub fn from_bundles(cfg: PipelineConfig, ks: WeightBundle, fx: WeightBundle) -> Result<Self> {
        let fingerprint = cfg.stream.fingerprint();
        fingerprint.ensure_matches(&ks.fingerprint).map_err(|e| {
            Error::FingerprintMismatch(format!("keyword spotter '{}': {e}", ks.name))
        })?;
        fingerprint.ensure_matches(&fx.fingerprint).map_err(|e| {
            Error::FingerprintMismatch(format!("d-vector extractor '{}': {e}", fx.name))
        })?;
        let budget = memory::estimate_memory(
            &cfg.stream,
            &ks,
            &fx,
            cfg.enrollment_size,
            cfg.memory_limit_bytes,
        )?;
        let mut pipeline = Self::with_models(
            cfg,
            Box::new(KeywordSpotter::new(ks)?),
            Box::new(DVectorExtractor::new(fx)?),
        )?;
        pipeline.budget = Some(budget);
        Ok(pipeline)
    }

    /// Builds a pipeline around arbitrary models. No memory budget applies.
    pub fn with_models(
        cfg: PipelineConfig,
        ks: Box<dyn KeywordModel>,
        fx: Box<dyn Embedder>,
    ) -> Result<Self> {
        let mfcc = MfccExtractor::new(&cfg.stream)?;
        let enrollment = EnrollmentSet::new(fx.dim(), cfg.enrollment_size, cfg.threshold)?;
        let mode = if enrollment.is_full() {
            Mode::Inferring
        } else {
            Mode::Enrolling
        };
        Ok(Self {
            cfg,
            mfcc,
            ks,
            fx,
            enrollment,
            mode,
            refractory_remaining: 0,
            budget: None,
            pending: VecDeque::new(),
            stats: PipelineStats::default(),
            last_timings: WindowTimings::default(),
        })
    }

    /// Replaces the enrollment state, e.g. with one restored from disk.
    pub fn restore_enrollment(&mut self, set: EnrollmentSet) -> Result<()> {
        if set.dim() != self.fx.dim() {
            return Err(Error::Dimension {
                expected: self.fx.dim(),
                actual: set.dim(),
            });
        }
        self.mode = if set.is_full() {
            Mode::Inferring
        } else {
            Mode::Enrolling
        };
        self.enrollment = set;
        Ok(())
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn enrollment(&self) -> &EnrollmentSet {
        &self.enrollment
    }

    pub fn progress(&self) -> Progress {
        self.enrollment.progress()
    }

    pub fn threshold(&self) -> f32 {
        self.enrollment.threshold()
    }

    pub fn budget(&self) -> Option<&MemoryBudget> {
        self.budget.as_ref()
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    pub fn last_timings(&self) -> WindowTimings {
        self.last_timings
    }

    pub fn set_threshold(&mut self, threshold: f32) -> Result<()> {
        self.enrollment.set_threshold(threshold)
    }

    /// Empties the enrollment set and returns to enrollment mode. The
    /// threshold is kept.
    pub fn reset_enrollment(&mut self) {
        self.enrollment.clear();
        self.mode = if self.enrollment.is_full() {
            Mode::Inferring
        } else {
            Mode::Enrolling
        };
        self.refractory_remaining = 0;
    }

    /// Queues a command to run before the next window.
    pub fn submit(&mut self, cmd: Command) {
        self.pending.push_back(cmd);
    }

    /// Runs every queued command now.
    pub fn apply_pending(&mut self) -> Result<()> {
        while let Some(cmd) = self.pending.pop_front() {
            match cmd {
                Command::SetThreshold(t) => self.set_threshold(t)?,
                Command::ResetEnrollment => self.reset_enrollment(),
            }
        }
        Ok(())
    }

    pub fn process_window(&mut self, window: &AudioWindow) -> Result<PipelineEvent> {
        self.apply_pending()?;
        let mut timings = WindowTimings::default();
        self.stats.windows += 1;

        let started = Instant::now();
        let spec = self.mfcc.extract(window)?;
        timings.mfcc = started.elapsed();

        let started = Instant::now();
        let ks = self.ks.classify(&spec)?;
        timings.keyword = started.elapsed();

        let mut detail = EventDetail {
            mode: self.mode,
            y: ks.y,
            ks,
            suppressed: false,
            z: None,
            sigma: None,
            best_index: None,
            progress: None,
        };

        if self.refractory_remaining > 0 {
            self.refractory_remaining -= 1;
            if detail.y == 1 {
                detail.y = 0;
                detail.suppressed = true;
            }
        }

        let mut x = 0;
        if detail.y == 1 {
            self.stats.keyword_windows += 1;
            self.refractory_remaining = self.cfg.refractory_hops;

            let started = Instant::now();
            let dv = self.fx.embed(&spec)?;
            timings.embedding = started.elapsed();
            self.stats.embeddings += 1;

            match self.mode {
                Mode::Enrolling => {
                    let progress = self.enrollment.enroll(dv)?;
                    if progress.is_complete() {
                        self.mode = Mode::Inferring;
                    }
                    detail.progress = Some(progress);
                }
                Mode::Inferring => {
                    let decision = asv::sv_decide(&dv, &self.enrollment)?;
                    x = if decision.z == 1 { 2 } else { 1 };
                    detail.z = Some(decision.z);
                    detail.sigma = Some(decision.sigma);
                    detail.best_index = Some(decision.best_index);
                }
            }
        }
        self.last_timings = timings;
        Ok(PipelineEvent {
            t: window.start_time(),
            x,
            detail,
        })
    }
}
