//! Pixel-level ROC evaluation.
//!
//! Superpixel scores are broadcast to their pixels. The ROC has one vertex
//! per distinct score (descending), so tied scores form a single diagonal
//! segment; AUC is the trapezoid area, which equals the Mann-Whitney
//! statistic with ties counted as one half. The binarisation threshold is the
//! lowest score whose false positive rate stays within 5%.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::superpixels::SuperpixelFrame;

pub const FPR_TARGET: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub f_score_at_5fpr: f64,
    pub precision_at_5fpr: f64,
    pub recall_at_5fpr: f64,
    /// Scores `>= threshold_used` count as object; `None` when even the top
    /// score exceeds the false positive budget.
    pub threshold_used: Option<f64>,
    pub operating_point: String,
    pub positive_pixels: u64,
    pub negative_pixels: u64,
    /// (fpr, tpr) from (0, 0) to (1, 1).
    pub roc: Vec<(f64, f64)>,
}

/// Pixels sharing one score: (score, positives, negatives).
type ScoreGroup = (f64, u64, u64);

fn metrics_from_groups(mut groups: Vec<ScoreGroup>) -> Result<Metrics> {
    if let Some(g) = groups.iter().find(|g| !g.0.is_finite()) {
        return Err(Error::NonFinite(format!("score {}", g.0)));
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut merged: Vec<ScoreGroup> = Vec::with_capacity(groups.len());
    for g in groups {
        match merged.last_mut() {
            Some(last) if last.0 == g.0 => {
                last.1 += g.1;
                last.2 += g.2;
            }
            _ => merged.push(g),
        }
    }
    let pos: u64 = merged.iter().map(|g| g.1).sum();
    let neg: u64 = merged.iter().map(|g| g.2).sum();
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateGroundTruth);
    }

    let mut roc = Vec::with_capacity(merged.len() + 1);
    roc.push((0.0, 0.0));
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut area2: u128 = 0;
    let mut operating: Option<(f64, u64, u64)> = None;
    for &(score, p, n) in &merged {
        let (tp0, fp0) = (tp, fp);
        tp += p;
        fp += n;
        area2 += (fp - fp0) as u128 * (tp + tp0) as u128;
        roc.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        if fp as f64 <= FPR_TARGET * neg as f64 {
            operating = Some((score, tp, fp));
        }
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);

    let (threshold_used, precision, recall) = match operating {
        Some((score, tp, fp)) if tp + fp > 0 => (Some(score), tp as f64 / (tp + fp) as f64, tp as f64 / pos as f64),
        Some((score, _, _)) => (Some(score), 0.0, 0.0),
        None => (None, 0.0, 0.0),
    };
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    Ok(Metrics {
        auc,
        f_score_at_5fpr: f_score,
        precision_at_5fpr: precision,
        recall_at_5fpr: recall,
        threshold_used,
        operating_point: "lowest threshold with FPR <= 0.05".into(),
        positive_pixels: pos,
        negative_pixels: neg,
        roc,
    })
}

/// Metrics from per-pixel scores and ground truth.
pub fn evaluate_pixels(scores: &[f64], truth: &[bool]) -> Result<Metrics> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension(format!("{} scores for {} pixels", scores.len(), truth.len())));
    }
    let groups = scores
        .iter()
        .zip(truth)
        .map(|(&s, &t)| (s, u64::from(t), u64::from(!t)))
        .collect();
    metrics_from_groups(groups)
}

/// Metrics from per-superpixel scores, label maps and per-frame masks.
pub fn evaluate(scores: &[Vec<f64>], label_maps: &[&[u32]], masks: &[Vec<bool>]) -> Result<Metrics> {
    if scores.len() != label_maps.len() || scores.len() != masks.len() {
        return Err(Error::Dimension(format!(
            "{} score frames, {} label maps, {} masks",
            scores.len(),
            label_maps.len(),
            masks.len()
        )));
    }
    let mut groups = Vec::new();
    for (t, ((s, labels), mask)) in scores.iter().zip(label_maps).zip(masks).enumerate() {
        if labels.len() != mask.len() {
            return Err(Error::Dimension(format!("frame {t}: label map and mask differ in size")));
        }
        let mut counts = vec![(0u64, 0u64); s.len()];
        for (&l, &m) in labels.iter().zip(mask) {
            let c = counts
                .get_mut(l as usize)
                .ok_or(Error::MissingScore { frame: t, id: l as usize })?;
            if m {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
        groups.extend(
            s.iter()
                .zip(counts)
                .filter(|(_, (p, n))| p + n > 0)
                .map(|(&score, (p, n))| (score, p, n)),
        );
    }
    metrics_from_groups(groups)
}

pub fn evaluate_frames(scores: &[Vec<f64>], frames: &[SuperpixelFrame], masks: &[Vec<bool>]) -> Result<Metrics> {
    let labels: Vec<&[u32]> = frames.iter().map(|f| f.labels()).collect();
    evaluate(scores, &labels, masks)
}
