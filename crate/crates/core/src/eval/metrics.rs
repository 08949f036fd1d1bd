use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One operating point. A score is accepted when it is strictly greater than
/// `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub tpr: f64,
}

/// Operating points ordered by strictly decreasing threshold: every distinct
/// score, then `-inf` where everything is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub genuine: usize,
    pub impostor: usize,
}

fn sorted_desc(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn compute_roc(genuine: &[f64], impostor: &[f64]) -> Result<RocCurve> {
    if genuine.is_empty() {
        return Err(Error::EmptyScores("genuine"));
    }
    if impostor.is_empty() {
        return Err(Error::EmptyScores("impostor"));
    }
    if genuine.iter().chain(impostor).any(|s| s.is_nan()) {
        return Err(Error::InvalidConfig("NaN score".into()));
    }
    let g = sorted_desc(genuine);
    let im = sorted_desc(impostor);
    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds.push(f64::NEG_INFINITY);

    let (ng, ni) = (g.len() as f64, im.len() as f64);
    let (mut gi, mut ii) = (0, 0);
    let points = thresholds
        .into_iter()
        .map(|t| {
            while gi < g.len() && g[gi] > t {
                gi += 1;
            }
            while ii < im.len() && im[ii] > t {
                ii += 1;
            }
            RocPoint {
                threshold: t,
                fpr: ii as f64 / ni,
                fnr: (g.len() - gi) as f64 / ng,
                tpr: gi as f64 / ng,
            }
        })
        .collect();
    Ok(RocCurve {
        points,
        genuine: g.len(),
        impostor: im.len(),
    })
}

/// Equal error rate and the threshold that comes closest to it.
///
/// The threshold minimises `|FPR - FNR|` over the curve's points, preferring
/// the lower threshold on ties. When no point has `FPR == FNR` the rate is
/// interpolated linearly between the two points either side of the
/// crossing.
pub fn eer_and_threshold(curve: &RocCurve) -> (f64, f64) {
    let pts = &curve.points;
    // FPR - FNR scaled by (genuine x impostor) is an exact integer, so
    // rates that tie as fractions also tie here.
    let (ng, ni) = (curve.genuine as i64, curve.impostor as i64);
    let gap = |p: &RocPoint| {
        let fa = (p.fpr * ni as f64).round() as i64;
        let fr = (p.fnr * ng as f64).round() as i64;
        fa * ng - fr * ni
    };
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if gap(p).abs() <= gap(&pts[best]).abs() {
            best = i;
        }
    }
    let threshold = pts[best].threshold;
    let at = pts[best];
    if gap(&at) == 0 {
        return (at.fpr, threshold);
    }
    for w in pts.windows(2) {
        let (d0, d1) = (w[0].fpr - w[0].fnr, w[1].fpr - w[1].fnr);
        if gap(&w[0]) < 0 && gap(&w[1]) > 0 {
            let t = -d0 / (d1 - d0);
            let fpr = w[0].fpr + t * (w[1].fpr - w[0].fpr);
            let fnr = w[0].fnr + t * (w[1].fnr - w[0].fnr);
            return ((fpr + fnr) / 2.0, threshold);
        }
    }
    ((at.fpr + at.fnr) / 2.0, threshold)
}

/// Trapezoidal area under TPR against FPR.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    for p in &curve.points {
        area += (p.fpr - prev.0) * (p.tpr + prev.1) / 2.0;
        prev = (p.fpr, p.tpr);
    }
    area
}

/// Accuracy and F1 of thresholded scores, the genuine class being positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub accuracy: f64,
    pub f1: f64,
}

pub fn classify_at(genuine: &[f64], impostor: &[f64], threshold: f64) -> Classification {
    let tp = genuine.iter().filter(|s| **s > threshold).count() as f64;
    let fneg = genuine.len() as f64 - tp;
    let fpos = impostor.iter().filter(|s| **s > threshold).count() as f64;
    let tn = impostor.len() as f64 - fpos;
    let total = tp + fneg + fpos + tn;
    let accuracy = if total > 0.0 { (tp + tn) / total } else { 0.0 };
    let f1 = if tp > 0.0 {
        2.0 * tp / (2.0 * tp + fpos + fneg)
    } else {
        0.0
    };
    Classification { accuracy, f1 }
}
