//! Transitive merging of nearby boxes.
//!
//! Boxes whose closest distance is within a pixel threshold are grouped
//! with a union-find and replaced by their tight enclosing box. Because a
//! merged box can move within threshold of further boxes, grouping is
//! iterated to a fixpoint; the output is guaranteed to contain no pair
//! closer than the threshold.

use super::{bbox_gap_squared, BBox};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, mut id: usize) -> usize {
        while self.parent[id] != id {
            self.parent[id] = self.parent[self.parent[id]];
            id = self.parent[id];
        }
        id
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        // Attach the larger root id under the smaller so component
        // representatives are stable across input orderings.
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        true
    }
}

fn within(a: &BBox, b: &BBox, threshold: f64) -> bool {
    bbox_gap_squared(a, b) as f64 <= threshold * threshold
}

/// Groups input boxes transitively by `gap <= threshold` and returns, per
/// group, the enclosing box plus the indices of the member inputs.
///
/// Groups are sorted by `(min_y, min_x)` of the merged box (full box order
/// as tie-break) and member indices ascending, so output is deterministic.
pub fn merge_groups(boxes: &[BBox], threshold: f64) -> Vec<(BBox, Vec<usize>)> {
    let mut uf = UnionFind::new(boxes.len());
    // Seed components, then re-test enclosing boxes until stable: merged
    // boxes can come within threshold of components they were not near
    // originally.
    loop {
        let mut roots: Vec<usize> = (0..boxes.len()).map(|i| uf.find(i)).collect();
        roots.sort_unstable();
        roots.dedup();
        let hulls: Vec<BBox> = roots
            .iter()
            .map(|&root| {
                let mut hull: Option<BBox> = None;
                for (i, b) in boxes.iter().enumerate() {
                    if uf.find(i) == root {
                        hull = Some(hull.map_or(*b, |h| h.enclosing(b)));
                    }
                }
                hull.expect("component has at least one member")
            })
            .collect();
        let mut changed = false;
        for i in 0..hulls.len() {
            for j in i + 1..hulls.len() {
                if within(&hulls[i], &hulls[j], threshold) && uf.union(roots[i], roots[j]) {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut by_root: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..boxes.len() {
        let root = uf.find(i);
        match by_root.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => by_root.push((root, vec![i])),
        }
    }
    let mut groups: Vec<(BBox, Vec<usize>)> = by_root
        .into_iter()
        .map(|(_, members)| {
            let hull = members
                .iter()
                .skip(1)
                .fold(boxes[members[0]], |h, &i| h.enclosing(&boxes[i]));
            (hull, members)
        })
        .collect();
    groups.sort_by_key(|(hull, _)| (hull.min_y(), hull.min_x(), *hull));
    groups
}

/// Replaces every group of boxes with pairwise gap `<= threshold` by its
/// tight enclosing box, iterating until no output pair is within the
/// threshold. Output is sorted by `(min_y, min_x)`.
pub fn merge_close_boxes(boxes: &[BBox], threshold: f64) -> Vec<BBox> {
    merge_groups(boxes, threshold)
        .into_iter()
        .map(|(hull, _)| hull)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::bbox_gap;

    fn bx(a: u32, b: u32, c: u32, d: u32) -> BBox {
        BBox::new(a, b, c, d).unwrap()
    }

    #[test]
    fn singleton_passes_through() {
        let boxes = [bx(0, 0, 10, 10)];
        assert_eq!(merge_close_boxes(&boxes, 10.0), vec![bx(0, 0, 10, 10)]);
        assert!(merge_close_boxes(&[], 10.0).is_empty());
    }

    #[test]
    fn gap_exactly_at_threshold_merges() {
        let boxes = [bx(0, 0, 10, 10), bx(20, 0, 30, 10)];
        assert_eq!(bbox_gap(&boxes[0], &boxes[1]).value(), 10.0);
        assert_eq!(merge_close_boxes(&boxes, 10.0), vec![bx(0, 0, 30, 10)]);
    }

    #[test]
    fn gaps_above_threshold_stay_apart() {
        let boxes = [bx(0, 0, 10, 10), bx(21, 0, 31, 10), bx(42, 0, 52, 10)];
        assert_eq!(merge_close_boxes(&boxes, 10.0), boxes.to_vec());
    }

    #[test]
    fn merging_cascades_to_fixpoint() {
        // c sits sqrt(101) px from both a and b, but only 10 px from
        // their merged hull: a second grouping round must pick it up.
        let a = bx(0, 0, 10, 10);
        let b = bx(0, 20, 10, 30);
        let c = bx(20, 11, 30, 19);
        assert!(bbox_gap(&a, &c).value() > 10.0);
        assert!(bbox_gap(&b, &c).value() > 10.0);
        assert_eq!(
            merge_close_boxes(&[a, b, c], 10.0),
            vec![bx(0, 0, 30, 30)]
        );
    }

    #[test]
    fn groups_carry_member_indices() {
        let boxes = [bx(40, 40, 50, 50), bx(0, 0, 10, 10), bx(12, 0, 22, 10)];
        let groups = merge_groups(&boxes, 10.0);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], (bx(0, 0, 22, 10), vec![1, 2]));
        assert_eq!(groups[1], (bx(40, 40, 50, 50), vec![0]));
    }

    #[test]
    fn zero_threshold_merges_touching_boxes() {
        let boxes = [bx(0, 0, 10, 10), bx(10, 0, 20, 10), bx(21, 0, 30, 10)];
        let merged = merge_close_boxes(&boxes, 0.0);
        assert_eq!(merged, vec![bx(0, 0, 20, 10), bx(21, 0, 30, 10)]);
    }
}
