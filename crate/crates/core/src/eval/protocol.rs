use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asv::{self, DVector, EnrollmentSet};
use crate::error::{Error, Result};
use crate::eval::dataset::{Embedded, Split};
use crate::eval::metrics::{auc, classify_at, compute_roc, eer_and_threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Best-match cosine similarity.
    Asv,
    /// Cosine similarity to the mean enrolled vector.
    Mcs,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Asv => "ASV",
            Method::Mcs => "MCS",
        }
    }

    pub fn score(self, dv: &DVector, set: &EnrollmentSet) -> Result<f32> {
        match self {
            Method::Asv => asv::best_match_similarity(dv, set).map(|(s, _)| s),
            Method::Mcs => asv::mcs_similarity(dv, set),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asv" => Ok(Method::Asv),
            "mcs" => Ok(Method::Mcs),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub methods: Vec<Method>,
    pub n_values: Vec<usize>,
    /// Seed for the per-speaker shuffle that picks enrollment vectors.
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Asv, Method::Mcs],
            n_values: vec![1, 8, 16, 64],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub eer: f64,
    pub auc: f64,
}

impl Metrics {
    fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            f1: sum(|m| m.f1),
            eer: sum(|m| m.eer),
            auc: sum(|m| m.auc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerResult {
    pub speaker: String,
    pub metrics: Metrics,
    /// Threshold at the validation EER, used for the test metrics.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub n: usize,
    pub speakers: Vec<SpeakerResult>,
    /// Average over the speakers that were evaluated.
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub method: Method,
    pub n: usize,
    pub speaker: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<Cell>,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn cell(&self, method: Method, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n,speaker,accuracy,f1,eer,auc,threshold\n");
        for c in &self.cells {
            for s in &c.speakers {
                let m = s.metrics;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.method.label(),
                    c.n,
                    s.speaker,
                    m.accuracy,
                    m.f1,
                    m.eer,
                    m.auc,
                    s.threshold
                );
            }
            let m = c.mean;
            let _ = writeln!(
                out,
                "{},{},mean,{},{},{},{},",
                c.method.label(),
                c.n,
                m.accuracy,
                m.f1,
                m.eer,
                m.auc
            );
        }
        out
    }

    /// Averages laid out as method x metric rows against n columns.
    pub fn table(&self) -> String {
        let ns: BTreeSet<usize> = self.cells.iter().map(|c| c.n).collect();
        let methods: BTreeSet<Method> = self.cells.iter().map(|c| c.method).collect();
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        let _ = write!(out, "{:<8} {:<6}", "solution", "metric");
        for n in &ns {
            let _ = write!(out, " {:>7}", format!("n={n}"));
        }
        out.push('\n');
        for m in methods {
            type Row = (&'static str, fn(&Metrics) -> f64);
            let rows: [Row; 4] = [
                ("Acc.", |x| x.accuracy),
                ("F1", |x| x.f1),
                ("EER", |x| x.eer),
                ("AUC", |x| x.auc),
            ];
            for (i, (name, get)) in rows.iter().enumerate() {
                let label = if i == 0 { m.label() } else { "" };
                let _ = write!(out, "{label:<8} {name:<6}");
                for n in &ns {
                    match self.cell(m, *n) {
                        Some(c) => {
                            let _ = write!(out, " {:>7.3}", get(&c.mean));
                        }
                        None => {
                            let _ = write!(out, " {:>7}", "-");
                        }
                    }
                }
                out.push('\n');
            }
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped {} n={} speaker {}: {}", s.method.label(), s.n, s.speaker, s.reason);
        }
        out
    }
}

/// Per-speaker enrollment order: a seeded shuffle of the training split, so
/// the vectors for a smaller n are a prefix of those for a larger n.
fn enrollment_order(train: &[&DVector], seed: u64, speaker_index: usize) -> Vec<DVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(speaker_index as u64));
    let mut v: Vec<DVector> = train.iter().map(|d| (*d).clone()).collect();
    v.shuffle(&mut rng);
    v
}

fn evaluate(
    method: Method,
    set: &EnrollmentSet,
    speaker: &str,
    val: &[&Embedded],
    test: &[&Embedded],
) -> Result<SpeakerResult> {
    let scores = |items: &[&Embedded]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut genuine = Vec::new();
        let mut impostor = Vec::new();
        for e in items {
            let s = f64::from(method.score(&e.dvector, set)?);
            if e.speaker == speaker {
                genuine.push(s);
            } else {
                impostor.push(s);
            }
        }
        Ok((genuine, impostor))
    };
    let (vg, vi) = scores(val)?;
    let curve = compute_roc(&vg, &vi)?;
    let (eer, threshold) = eer_and_threshold(&curve);
    let area = auc(&curve);
    let (tg, ti) = scores(test)?;
    let cls = classify_at(&tg, &ti, threshold);
    Ok(SpeakerResult {
        speaker: speaker.to_string(),
        metrics: Metrics {
            accuracy: cls.accuracy,
            f1: cls.f1,
            eer,
            auc: area,
        },
        threshold,
    })
}

/// Enrolls each speaker in turn from `n` training d-vectors, fixes the
/// threshold at the validation EER, and scores the test split with it.
/// Every other speaker acts as the impostor population.
pub fn run_protocol(data: &[Embedded], cfg: &ProtocolConfig) -> Result<EvalReport> {
    let speakers: Vec<String> = data
        .iter()
        .map(|e| e.speaker.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if speakers.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "protocol needs at least 2 speakers, found {}",
            speakers.len()
        )));
    }
    let dim = data[0].dvector.dim();
    let val: Vec<&Embedded> = data.iter().filter(|e| e.split == Split::Val).collect();
    let test: Vec<&Embedded> = data.iter().filter(|e| e.split == Split::Test).collect();

    let orders: Vec<Vec<DVector>> = speakers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let train: Vec<&DVector> = data
                .iter()
                .filter(|e| e.split == Split::Train && &e.speaker == s)
                .map(|e| &e.dvector)
                .collect();
            enrollment_order(&train, cfg.seed, i)
        })
        .collect();

    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.n_values {
            for si in 0..speakers.len() {
                jobs.push((method, n, si));
            }
        }
    }
    let results: Vec<(Method, usize, usize, Result<SpeakerResult>)> = jobs
        .par_iter()
        .map(|&(method, n, si)| {
            let speaker = &speakers[si];
            let order = &orders[si];
            let res = (|| {
                if n == 0 || order.len() < n {
                    return Err(Error::InvalidConfig(format!(
                        "{} training d-vectors, need {n}",
                        order.len()
                    )));
                }
                let mut set = EnrollmentSet::new(dim, n, 0.0)?;
                for dv in &order[..n] {
                    set.enroll(dv.clone())?;
                }
                evaluate(method, &set, speaker, &val, &test)
            })();
            (method, n, si, res)
        })
        .collect();

    let mut report = EvalReport {
        cells: Vec::new(),
        skipped: Vec::new(),
        notes: vec![
            "threshold fixed at the validation EER per enrolled speaker".into(),
            "accuracy/F1 on the natural genuine:impostor ratio of the test split".into(),
        ],
    };
    for &method in &cfg.methods {
        for &n in &cfg.n_values {
            let mut speakers_out = Vec::new();
            for (m, nn, si, res) in &results {
                if *m != method || *nn != n {
                    continue;
                }
                match res {
                    Ok(r) => speakers_out.push(r.clone()),
                    Err(e) => report.skipped.push(Skipped {
                        method,
                        n,
                        speaker: speakers[*si].clone(),
                        reason: e.to_string(),
                    }),
                }
            }
            if !speakers_out.is_empty() {
                let metrics: Vec<Metrics> = speakers_out.iter().map(|s| s.metrics).collect();
                report.cells.push(Cell {
                    method,
                    n,
                    mean: Metrics::mean(&metrics),
                    speakers: speakers_out,
                });
            }
        }
    }
    Ok(report)
}
