//! Greedy IoU matching of detections to ground-truth instances.

use super::{Detection, EvalError};
use crate::annotation::ClusterInstance;
use crate::geometry::bbox_iou;
use std::cmp::Ordering;

/// Outcome of matching one patch's detections against its ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Matched ground-truth index per input detection, in input order.
    pub assignment: Vec<Option<usize>>,
    pub tp: u64,
    pub fp: u64,
    /// Unmatched ground-truth instances (false negatives).
    pub missed: u64,
}

/// Sorts detection indices by descending score, breaking ties on the
/// lexicographic box order. Shared by NMS-style consumers and the PR
/// accumulator so every ranking in the crate agrees.
pub(crate) fn ranked_indices(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| dets[a].bbox.cmp(&dets[b].bbox))
    });
    order
}

/// Picks the unmatched ground truth with the highest IoU (lowest index on
/// ties) reaching `iou_thresh`, and marks it taken.
pub(crate) fn claim_best_gt(
    det: &Detection,
    gts: &[ClusterInstance],
    taken: &mut [bool],
    iou_thresh: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (gi, gt) in gts.iter().enumerate() {
        if taken[gi] {
            continue;
        }
        let iou = bbox_iou(&det.bbox, &gt.bbox);
        if iou >= iou_thresh && best.is_none_or(|(_, b)| iou > b) {
            best = Some((gi, iou));
        }
    }
    if let Some((gi, _)) = best {
        taken[gi] = true;
        Some(gi)
    } else {
        None
    }
}

/// Matches detections of one patch to ground truth: detections are
/// processed by descending score, each claiming the unmatched instance
/// with the highest IoU at or above `iou_thresh`. Matched pairs are TPs,
/// leftover detections FPs, leftover instances FNs (duplicates on an
/// already-matched instance count as FPs).
pub fn match_detections(
    dets: &[Detection],
    gts: &[ClusterInstance],
    iou_thresh: f64,
) -> Result<MatchOutcome, EvalError> {
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.id != first.id) {
            return Err(EvalError::MixedPatchIds {
                first: first.id.clone(),
                second: other.id.clone(),
            });
        }
    }

    let mut assignment = vec![None; dets.len()];
    let mut taken = vec![false; gts.len()];
    for idx in ranked_indices(dets) {
        assignment[idx] = claim_best_gt(&dets[idx], gts, &mut taken, iou_thresh);
    }

    let tp = assignment.iter().filter(|a| a.is_some()).count() as u64;
    Ok(MatchOutcome {
        fp: dets.len() as u64 - tp,
        missed: gts.len() as u64 - tp,
        tp,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::InstanceSource;
    use crate::geometry::BBox;

    fn det(b: (u32, u32, u32, u32), score: f64) -> Detection {
        Detection {
            id: "p".into(),
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            score,
        }
    }

    fn gt(b: (u32, u32, u32, u32)) -> ClusterInstance {
        ClusterInstance {
            id: 1,
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            area: None,
            source: InstanceSource::Labeled,
        }
    }

    #[test]
    fn exact_hit_is_tp() {
        let out = match_detections(&[det((0, 0, 10, 10), 0.9)], &[gt((0, 0, 10, 10))], 0.5)
            .unwrap();
        assert_eq!((out.tp, out.fp, out.missed), (1, 0, 0));
        assert_eq!(out.assignment, vec![Some(0)]);
    }

    #[test]
    fn duplicate_detection_is_penalized() {
        let dets = [det((0, 0, 10, 10), 0.9), det((0, 0, 10, 10), 0.8)];
        let out = match_detections(&dets, &[gt((0, 0, 10, 10))], 0.5).unwrap();
        assert_eq!((out.tp, out.fp, out.missed), (1, 1, 0));
        assert_eq!(out.assignment, vec![Some(0), None]);
    }

    #[test]
    fn low_iou_yields_fp_and_fn() {
        // IoU here is 25/175 ≈ 0.1428, below the 0.25 threshold.
        let out = match_detections(&[det((0, 0, 10, 10), 0.9)], &[gt((5, 5, 15, 15))], 0.25)
            .unwrap();
        assert_eq!((out.tp, out.fp, out.missed), (0, 1, 1));
    }

    #[test]
    fn highest_score_claims_best_gt_first() {
        let dets = [det((0, 0, 10, 10), 0.5), det((0, 0, 10, 10), 0.9)];
        let gts = [gt((0, 0, 10, 10)), gt((2, 2, 12, 12))];
        let out = match_detections(&dets, &gts, 0.3).unwrap();
        // The 0.9 detection takes the exact-fit instance; the weaker
        // duplicate falls through to the offset one.
        assert_eq!(out.assignment, vec![Some(1), Some(0)]);
    }

    #[test]
    fn mixed_patch_ids_are_rejected() {
        let mut a = det((0, 0, 10, 10), 0.9);
        a.id = "p1".into();
        let mut b = det((0, 0, 10, 10), 0.8);
        b.id = "p2".into();
        assert!(matches!(
            match_detections(&[a, b], &[], 0.5),
            Err(EvalError::MixedPatchIds { .. })
        ));
    }
}
