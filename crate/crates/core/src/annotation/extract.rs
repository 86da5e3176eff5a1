//! Cluster extraction from instance label maps.

use super::{ClusterInstance, InstanceSource};
use crate::geometry::{BBox, InstanceMask};

/// Extracts one [`ClusterInstance`] per 8-connected component of equal
/// nonzero label, re-labeled by row-major scan order of the component's
/// first pixel. An all-background mask yields an empty list.
pub fn extract_clusters(mask: &InstanceMask) -> Vec<ClusterInstance> {
    extract_clusters_with_mask(mask).0
}

/// Like [`extract_clusters`], also returning the re-labeled mask whose
/// label `k` is exactly the pixel set of instance `k`. The patch pipeline
/// uses that correspondence to recompute clipped mask areas.
pub fn extract_clusters_with_mask(mask: &InstanceMask) -> (Vec<ClusterInstance>, InstanceMask) {
    let width = mask.width() as usize;
    let height = mask.height() as usize;
    let labels = mask.labels();
    let mut relabeled = vec![0u16; labels.len()];
    let mut instances = Vec::new();
    let mut next_id: u16 = 0;
    let mut stack: Vec<usize> = Vec::new();

    for start in 0..labels.len() {
        if labels[start] == 0 || relabeled[start] != 0 {
            continue;
        }
        next_id = next_id
            .checked_add(1)
            .expect("more instances than a u16 label map can hold");
        let original = labels[start];
        let mut count = 0u64;
        let (mut min_x, mut min_y) = (u32::MAX, u32::MAX);
        let (mut max_x, mut max_y) = (0u32, 0u32);

        stack.push(start);
        relabeled[start] = next_id;
        while let Some(idx) = stack.pop() {
            count += 1;
            let x = idx % width;
            let y = idx / width;
            min_x = min_x.min(x as u32);
            min_y = min_y.min(y as u32);
            max_x = max_x.max(x as u32);
            max_y = max_y.max(y as u32);

            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let nidx = ny as usize * width + nx as usize;
                    if labels[nidx] == original && relabeled[nidx] == 0 {
                        relabeled[nidx] = next_id;
                        stack.push(nidx);
                    }
                }
            }
        }

        instances.push(ClusterInstance {
            id: u32::from(next_id),
            bbox: BBox::new(min_x, min_y, max_x + 1, max_y + 1)
                .expect("component spans at least one pixel"),
            area: Some(count),
            source: InstanceSource::Labeled,
        });
    }

    let relabeled = InstanceMask::from_labels(mask.width(), mask.height(), relabeled)
        .expect("scan re-labeling produces dense ids");
    (instances, relabeled)
}
