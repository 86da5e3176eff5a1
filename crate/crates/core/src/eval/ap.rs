//! Average precision over pooled detections.
//!
//! Detections from all patches are pooled and ranked by descending score;
//! matching is greedy within each patch. The PR curve takes one sample at
//! every distinct score, and AP is the area under the precision envelope
//! (all-points interpolation): `AP = Σ (r_i − r_{i−1}) · max_{j≥i} p_j`.

use super::coverage::coverage_fraction;
use super::matching::{claim_best_gt, ranked_indices};
use super::{
    coco_thresholds, Detection, EvalConfigEcho, EvalError, EvalReport, GroundTruthSet, PrCurve,
    PrPoint, ThresholdMetrics,
};
use std::collections::BTreeMap;

/// Report-level options for [`evaluate_sweep`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Also report the mean AP over the COCO ladder 0.50..0.95.
    pub coco_mean: bool,
    /// Score cutoff for the per-patch infestation coverage.
    pub infestation_score_cutoff: f64,
    /// NMS threshold applied upstream, echoed into the report.
    pub nms_threshold: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            coco_mean: false,
            infestation_score_cutoff: 0.3,
            nms_threshold: None,
        }
    }
}

/// Pools detections in rank order and flags each one TP or FP by greedy
/// per-patch matching. Returns flags in rank order plus the GT total.
fn ranked_tp_flags(dets: &[Detection], gts: &GroundTruthSet, iou_thresh: f64) -> (Vec<(f64, bool)>, u64) {
    let total_gt: u64 = gts.values().map(|g| g.instances.len() as u64).sum();

    // Rank globally; the per-patch restriction of this order is exactly
    // the order match_detections uses, so flags agree with it.
    let mut order = ranked_indices(dets);
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| dets[a].id.cmp(&dets[b].id))
            .then_with(|| dets[a].bbox.cmp(&dets[b].bbox))
    });

    let mut taken: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    let mut flags = Vec::with_capacity(dets.len());
    for idx in order {
        let det = &dets[idx];
        let tp = match gts.get(&det.id) {
            Some(patch_gt) => {
                let slots = taken
                    .entry(det.id.as_str())
                    .or_insert_with(|| vec![false; patch_gt.instances.len()]);
                claim_best_gt(det, &patch_gt.instances, slots, iou_thresh).is_some()
            }
            // Predictions on patches without ground truth are plain FPs.
            None => false,
        };
        flags.push((det.score, tp));
    }
    (flags, total_gt)
}

fn curve_from_flags(flags: &[(f64, bool)], total_gt: u64) -> PrCurve {
    let mut points = Vec::new();
    let mut tp = 0u64;
    let mut fp = 0u64;
    for (i, &(score, is_tp)) in flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        // Sample once per distinct score: ties enter the curve together.
        let last_of_score = flags.get(i + 1).is_none_or(|&(next, _)| next != score);
        if last_of_score {
            points.push(PrPoint {
                score,
                recall: tp as f64 / total_gt as f64,
                precision: tp as f64 / (tp + fp) as f64,
            });
        }
    }
    PrCurve { points }
}

fn ap_from_curve(curve: &PrCurve) -> f64 {
    let n = curve.points.len();
    let mut envelope = vec![0.0f64; n];
    let mut running = 0.0f64;
    for i in (0..n).rev() {
        running = running.max(curve.points[i].precision);
        envelope[i] = running;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (point, env) in curve.points.iter().zip(&envelope) {
        ap += (point.recall - prev_recall) * env;
        prev_recall = point.recall;
    }
    ap
}

/// Area under the PR curve at one IoU threshold.
///
/// Errors when there is no ground truth at all (AP is undefined then);
/// zero detections against nonzero ground truth is simply AP = 0.
pub fn average_precision(
    dets: &[Detection],
    gts: &GroundTruthSet,
    iou_thresh: f64,
) -> Result<(f64, PrCurve), EvalError> {
    let (flags, total_gt) = ranked_tp_flags(dets, gts, iou_thresh);
    if total_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let curve = curve_from_flags(&flags, total_gt);
    Ok((ap_from_curve(&curve), curve))
}

/// Recall with every detection kept (no score cutoff); the maximum recall
/// point of the PR curve.
pub fn recall_overall(
    dets: &[Detection],
    gts: &GroundTruthSet,
    iou_thresh: f64,
) -> Result<f64, EvalError> {
    let (flags, total_gt) = ranked_tp_flags(dets, gts, iou_thresh);
    if total_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let tp = flags.iter().filter(|&&(_, t)| t).count() as u64;
    Ok(tp as f64 / total_gt as f64)
}

fn validate_thresholds(thresholds: &[f64]) -> Result<Vec<f64>, EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(EvalError::InvalidThreshold(t));
        }
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    Ok(sorted)
}

fn metrics_at(dets: &[Detection], gts: &GroundTruthSet, iou: f64) -> Result<ThresholdMetrics, EvalError> {
    let (flags, total_gt) = ranked_tp_flags(dets, gts, iou);
    if total_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let curve = curve_from_flags(&flags, total_gt);
    let ap = ap_from_curve(&curve);
    let tp = flags.iter().filter(|&&(_, t)| t).count() as u64;
    Ok(ThresholdMetrics {
        iou,
        ap,
        recall: tp as f64 / total_gt as f64,
        tp,
        fp: dets.len() as u64 - tp,
        missed: total_gt - tp,
        curve,
    })
}

/// Runs [`average_precision`] and [`recall_overall`] for every requested
/// IoU threshold (rows sorted ascending) and computes the per-patch
/// infestation coverage.
pub fn evaluate_sweep(
    dets: &[Detection],
    gts: &GroundTruthSet,
    thresholds: &[f64],
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let thresholds = validate_thresholds(thresholds)?;
    let entries = thresholds
        .iter()
        .map(|&iou| metrics_at(dets, gts, iou))
        .collect::<Result<Vec<_>, _>>()?;

    let coco_mean_ap = if options.coco_mean {
        let ladder = coco_thresholds();
        let sum: f64 = ladder
            .iter()
            .map(|&iou| metrics_at(dets, gts, iou).map(|m| m.ap))
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .sum();
        Some(sum / ladder.len() as f64)
    } else {
        None
    };

    let mut by_patch: BTreeMap<&str, Vec<Detection>> = BTreeMap::new();
    for det in dets {
        by_patch.entry(det.id.as_str()).or_default().push(det.clone());
    }
    let infestation = gts
        .iter()
        .map(|(id, patch_gt)| {
            let patch_dets = by_patch.get(id.as_str()).map_or(&[][..], Vec::as_slice);
            let score = coverage_fraction(
                patch_dets,
                patch_gt.width,
                patch_gt.height,
                options.infestation_score_cutoff,
            );
            (id.clone(), score)
        })
        .collect();

    Ok(EvalReport {
        config: EvalConfigEcho {
            iou_thresholds: thresholds,
            nms_threshold: options.nms_threshold,
            infestation_score_cutoff: options.infestation_score_cutoff,
        },
        entries,
        coco_mean_ap,
        infestation,
    })
}
