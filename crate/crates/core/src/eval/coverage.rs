//! Box-coverage infestation scoring.

use super::Detection;
use crate::geometry::BBox;

/// Exact area of the union of boxes, by coordinate-compressed column
/// sweep. Never double-counts overlap.
fn union_area(boxes: &[BBox]) -> u64 {
    if boxes.is_empty() {
        return 0;
    }
    let mut xs: Vec<u32> = boxes
        .iter()
        .flat_map(|b| [b.min_x(), b.max_x()])
        .collect();
    xs.sort_unstable();
    xs.dedup();

    let mut area = 0u64;
    for strip in xs.windows(2) {
        let (x0, x1) = (strip[0], strip[1]);
        let mut intervals: Vec<(u32, u32)> = boxes
            .iter()
            .filter(|b| b.min_x() <= x0 && b.max_x() >= x1)
            .map(|b| (b.min_y(), b.max_y()))
            .collect();
        intervals.sort_unstable();
        let mut covered = 0u64;
        let mut open: Option<(u32, u32)> = None;
        for (lo, hi) in intervals {
            match open {
                Some((olo, ohi)) if lo <= ohi => open = Some((olo, ohi.max(hi))),
                Some((olo, ohi)) => {
                    covered += u64::from(ohi - olo);
                    open = Some((lo, hi));
                }
                None => open = Some((lo, hi)),
            }
        }
        if let Some((olo, ohi)) = open {
            covered += u64::from(ohi - olo);
        }
        area += u64::from(x1 - x0) * covered;
    }
    area
}

/// Fraction of a `width`×`height` canvas covered by the union of the
/// detections' boxes at or above the score cutoff. Boxes are clipped to
/// the canvas, so the result is always in `[0, 1]`.
pub(crate) fn coverage_fraction(dets: &[Detection], width: u32, height: u32, score_cutoff: f64) -> f64 {
    if width == 0 || height == 0 {
        return 0.0;
    }
    let canvas = match BBox::new(0, 0, width, height) {
        Ok(b) => b,
        Err(_) => return 0.0,
    };
    let clipped: Vec<BBox> = dets
        .iter()
        .filter(|d| d.score >= score_cutoff)
        .filter_map(|d| d.bbox.intersection(&canvas))
        .collect();
    union_area(&clipped) as f64 / (u64::from(width) * u64::from(height)) as f64
}

/// Infestation score of one patch: covered pixels over `patch_size²` for
/// the union of predicted boxes with score at or above the cutoff.
pub fn infestation_score(patch_dets: &[Detection], patch_size: u32, score_cutoff: f64) -> f64 {
    coverage_fraction(patch_dets, patch_size, patch_size, score_cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(b: (u32, u32, u32, u32), score: f64) -> Detection {
        Detection {
            id: "p".into(),
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            score,
        }
    }

    #[test]
    fn no_detections_scores_zero() {
        assert_eq!(infestation_score(&[], 400, 0.3), 0.0);
    }

    #[test]
    fn single_box_fraction() {
        let dets = [det((0, 0, 200, 200), 0.9)];
        assert_eq!(infestation_score(&dets, 400, 0.3), 0.25);
    }

    #[test]
    fn overlapping_boxes_count_once() {
        let dets = [det((0, 0, 200, 200), 0.9), det((100, 100, 300, 300), 0.8)];
        // Union is 2·40000 − 10000 = 70000 of 160000.
        assert_eq!(infestation_score(&dets, 400, 0.3), 70_000.0 / 160_000.0);
    }

    #[test]
    fn cutoff_filters_low_scores() {
        let dets = [det((0, 0, 200, 200), 0.1)];
        assert_eq!(infestation_score(&dets, 400, 0.3), 0.0);
        assert_eq!(infestation_score(&dets, 400, 0.1), 0.25);
    }

    #[test]
    fn boxes_are_clipped_to_the_patch() {
        let dets = [det((300, 300, 600, 600), 1.0)];
        assert_eq!(infestation_score(&dets, 400, 0.3), 10_000.0 / 160_000.0);
    }

    #[test]
    fn union_matches_rasterization_on_fixed_layout() {
        let boxes = [
            BBox::new(0, 0, 30, 30).unwrap(),
            BBox::new(20, 10, 50, 40).unwrap(),
            BBox::new(45, 35, 60, 60).unwrap(),
            BBox::new(5, 50, 15, 55).unwrap(),
        ];
        let mut grid = vec![false; 64 * 64];
        for b in &boxes {
            for y in b.min_y()..b.max_y() {
                for x in b.min_x()..b.max_x() {
                    grid[(y * 64 + x) as usize] = true;
                }
            }
        }
        let expected = grid.iter().filter(|&&c| c).count() as u64;
        assert_eq!(union_area(&boxes), expected);
    }
}
