//! Greedy non-maximum suppression.

use super::bbox_iou;
use crate::eval::Detection;

/// Greedy NMS: keep detections in descending score order, suppressing any
/// remaining detection whose IoU with a kept box exceeds the threshold.
///
/// Score ties break on the lexicographic box order so results are stable
/// across runs and platforms. All detections are treated as sharing one
/// canvas; group by patch id before calling when suppressing per patch.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| dets[a].bbox.cmp(&dets[b].bbox))
    });

    let mut kept: Vec<Detection> = Vec::new();
    for idx in order {
        let candidate = &dets[idx];
        let suppressed = kept
            .iter()
            .any(|k| bbox_iou(&k.bbox, &candidate.bbox) > iou_threshold);
        if !suppressed {
            kept.push(candidate.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn det(b: (u32, u32, u32, u32), score: f64) -> Detection {
        Detection {
            id: "p".into(),
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            score,
        }
    }

    #[test]
    fn singleton_is_kept() {
        let d = det((0, 0, 10, 10), 0.4);
        assert_eq!(nms(std::slice::from_ref(&d), 0.6), vec![d]);
    }

    #[test]
    fn identical_boxes_keep_highest_score() {
        let dets = [det((0, 0, 10, 10), 0.8), det((0, 0, 10, 10), 0.9)];
        let kept = nms(&dets, 0.6);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn low_overlap_keeps_both() {
        // IoU between these boxes is 25/175, well under the threshold.
        let dets = [det((0, 0, 10, 10), 0.9), det((5, 5, 15, 15), 0.8)];
        let kept = nms(&dets, 0.6);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn equal_scores_break_ties_on_box_order() {
        let dets = [det((5, 0, 15, 10), 0.7), det((0, 0, 10, 10), 0.7)];
        let kept = nms(&dets, 0.3);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].bbox, BBox::new(0, 0, 10, 10).unwrap());
    }
}
