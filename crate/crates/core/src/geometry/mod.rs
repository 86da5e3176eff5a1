//! Exact axis-aligned box and raster-mask geometry.
//!
//! Boxes live on half-open integer pixel intervals `[min, max)`, so every
//! intersection/union area is an exact integer and IoU is an exact ratio.
//! Gap distances between boxes are Euclidean over the boxes' closed point
//! sets: zero iff the boxes overlap or touch.

mod mask;
mod merge;
mod nms;

pub use mask::{mask_to_bbox, InstanceMask};
pub use merge::{merge_close_boxes, merge_groups};
pub use nms::nms;

use thiserror::Error;

/// Errors produced by geometry constructors and mask lookups.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("invalid box [{min_x},{min_y},{max_x},{max_y}): min must be strictly below max")]
    InvalidBox {
        min_x: u32,
        min_y: u32,
        max_x: u32,
        max_y: u32,
    },
    #[error("instance id {0} not present in mask")]
    UnknownInstance(u16),
    #[error("label map holds {got} pixels, expected {expected} for {width}x{height}")]
    LabelMapSize {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
    #[error("instance ids are not dense: id {missing} is unused while {max} is present")]
    SparseLabels { missing: u16, max: u16 },
}

/// Axis-aligned bounding box over half-open pixel intervals `[min, max)`.
///
/// The derived ordering is lexicographic over
/// `(min_x, min_y, max_x, max_y)`, which is the deterministic tie-break
/// used by [`nms`] and the evaluation matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BBox {
    min_x: u32,
    min_y: u32,
    max_x: u32,
    max_y: u32,
}

impl BBox {
    /// Builds a box, rejecting empty or inverted intervals.
    pub fn new(min_x: u32, min_y: u32, max_x: u32, max_y: u32) -> Result<Self, GeometryError> {
        if min_x >= max_x || min_y >= max_y {
            return Err(GeometryError::InvalidBox {
                min_x,
                min_y,
                max_x,
                max_y,
            });
        }
        Ok(Self {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn min_x(&self) -> u32 {
        self.min_x
    }

    pub fn min_y(&self) -> u32 {
        self.min_y
    }

    pub fn max_x(&self) -> u32 {
        self.max_x
    }

    pub fn max_y(&self) -> u32 {
        self.max_y
    }

    pub fn width(&self) -> u32 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> u32 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Intersection box, or `None` when the boxes are disjoint.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let min_x = self.min_x.max(other.min_x);
        let min_y = self.min_y.max(other.min_y);
        let max_x = self.max_x.min(other.max_x);
        let max_y = self.max_y.min(other.max_y);
        if min_x < max_x && min_y < max_y {
            Some(BBox {
                min_x,
                min_y,
                max_x,
                max_y,
            })
        } else {
            None
        }
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        self.intersection(other).map_or(0, |b| b.area())
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.intersection(other).is_some()
    }

    /// True when `other` lies fully inside `self`.
    pub fn contains(&self, other: &BBox) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    /// Tight box enclosing both inputs.
    pub fn enclosing(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    /// Box shifted by `(dx, dy)`; fails when a coordinate would leave `u32`.
    pub fn translated(&self, dx: i64, dy: i64) -> Result<BBox, GeometryError> {
        let shift = |v: u32, d: i64| -> Option<u32> {
            let moved = i64::from(v).checked_add(d)?;
            u32::try_from(moved).ok()
        };
        match (
            shift(self.min_x, dx),
            shift(self.min_y, dy),
            shift(self.max_x, dx),
            shift(self.max_y, dy),
        ) {
            (Some(min_x), Some(min_y), Some(max_x), Some(max_y)) => {
                BBox::new(min_x, min_y, max_x, max_y)
            }
            _ => Err(GeometryError::InvalidBox {
                min_x: self.min_x,
                min_y: self.min_y,
                max_x: self.max_x,
                max_y: self.max_y,
            }),
        }
    }
}

/// Minimum Euclidean distance between two boxes' closed point sets.
///
/// Zero exactly when the boxes overlap or touch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GapDistance(f64);

impl GapDistance {
    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_touching(&self) -> bool {
        self.0 == 0.0
    }
}

/// Intersection-over-union of two boxes as an exact integer-area ratio.
pub fn bbox_iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

fn axis_gap(a_min: u32, a_max: u32, b_min: u32, b_max: u32) -> u64 {
    if b_min > a_max {
        u64::from(b_min - a_max)
    } else if a_min > b_max {
        u64::from(a_min - b_max)
    } else {
        0
    }
}

/// Squared gap in integer pixels; shared with the merge threshold test so
/// `gap <= threshold` is decided without rounding.
pub(crate) fn bbox_gap_squared(a: &BBox, b: &BBox) -> u64 {
    let dx = axis_gap(a.min_x, a.max_x, b.min_x, b.max_x);
    let dy = axis_gap(a.min_y, a.max_y, b.min_y, b.max_y);
    dx * dx + dy * dy
}

/// Closest distance between two boxes (Euclidean, per-axis gaps combined).
pub fn bbox_gap(a: &BBox, b: &BBox) -> GapDistance {
    GapDistance((bbox_gap_squared(a, b) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(a: u32, b: u32, c: u32, d: u32) -> BBox {
        BBox::new(a, b, c, d).unwrap()
    }

    #[test]
    fn rejects_inverted_and_empty_boxes() {
        assert!(BBox::new(5, 0, 5, 10).is_err());
        assert!(BBox::new(6, 0, 5, 10).is_err());
        assert!(BBox::new(0, 3, 10, 3).is_err());
        assert!(BBox::new(0, 0, 1, 1).is_ok());
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = bx(0, 0, 10, 10);
        assert_eq!(bbox_iou(&a, &a), 1.0);
        assert_eq!(bbox_iou(&a, &bx(50, 50, 60, 60)), 0.0);
    }

    #[test]
    fn iou_partial_overlap_is_exact() {
        let a = bx(0, 0, 10, 10);
        let b = bx(5, 5, 15, 15);
        // 25 shared pixels over 175 in the union.
        assert_eq!(bbox_iou(&a, &b), 25.0 / 175.0);
        assert_eq!(bbox_iou(&a, &b), bbox_iou(&b, &a));
    }

    #[test]
    fn gap_zero_for_overlap_and_touch() {
        let a = bx(0, 0, 10, 10);
        assert!(bbox_gap(&a, &bx(5, 5, 15, 15)).is_touching());
        assert!(bbox_gap(&a, &bx(10, 0, 20, 10)).is_touching());
        assert!(bbox_gap(&a, &a).is_touching());
    }

    #[test]
    fn gap_axis_and_diagonal() {
        let a = bx(0, 0, 10, 10);
        assert_eq!(bbox_gap(&a, &bx(20, 0, 30, 10)).value(), 10.0);
        // dx = 6, dy = 8 -> 10 exactly.
        assert_eq!(bbox_gap(&a, &bx(16, 18, 20, 22)).value(), 10.0);
        assert_eq!(
            bbox_gap(&a, &bx(16, 18, 20, 22)).value(),
            bbox_gap(&bx(16, 18, 20, 22), &a).value()
        );
    }

    #[test]
    fn translation_round_trips_and_checks_bounds() {
        let a = bx(10, 20, 30, 40);
        let moved = a.translated(-10, -20).unwrap();
        assert_eq!(moved, bx(0, 0, 20, 20));
        assert_eq!(moved.translated(10, 20).unwrap(), a);
        assert!(a.translated(-11, 0).is_err());
    }
}
