//! Instance label maps.
//!
//! A mask is a single-channel map of `u16` labels: 0 is background, label
//! `k >= 1` marks pixels of instance `k`. Labels must be dense `1..=K`.

use super::{BBox, GeometryError};

/// Dense per-pixel instance label map with cached per-instance areas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: u32,
    height: u32,
    labels: Vec<u16>,
    areas: Vec<u64>,
}

impl InstanceMask {
    /// Wraps a row-major label buffer, validating size and label density.
    pub fn from_labels(width: u32, height: u32, labels: Vec<u16>) -> Result<Self, GeometryError> {
        let expected = width as usize * height as usize;
        if labels.len() != expected {
            return Err(GeometryError::LabelMapSize {
                width,
                height,
                expected,
                got: labels.len(),
            });
        }
        let max = labels.iter().copied().max().unwrap_or(0);
        let mut areas = vec![0u64; max as usize];
        for &label in &labels {
            if label > 0 {
                areas[label as usize - 1] += 1;
            }
        }
        if let Some(gap) = areas.iter().position(|&a| a == 0) {
            return Err(GeometryError::SparseLabels {
                missing: gap as u16 + 1,
                max,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
            areas,
        })
    }

    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width as usize * height as usize],
            areas: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of instances (labels run `1..=instance_count`).
    pub fn instance_count(&self) -> u16 {
        self.areas.len() as u16
    }

    pub fn label_at(&self, x: u32, y: u32) -> u16 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Pixel count of one instance.
    pub fn area(&self, instance_id: u16) -> Result<u64, GeometryError> {
        if instance_id == 0 || instance_id > self.instance_count() {
            return Err(GeometryError::UnknownInstance(instance_id));
        }
        Ok(self.areas[instance_id as usize - 1])
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Pixels of `instance_id` inside the half-open window, counted in one
    /// row scan.
    pub fn count_in_window(&self, instance_id: u16, window: &BBox) -> u64 {
        let mut count = 0;
        let w = self.width as usize;
        let x0 = window.min_x().min(self.width) as usize;
        let x1 = window.max_x().min(self.width) as usize;
        let y0 = window.min_y().min(self.height) as usize;
        let y1 = window.max_y().min(self.height) as usize;
        for y in y0..y1 {
            let row = &self.labels[y * w + x0..y * w + x1];
            count += row.iter().filter(|&&l| l == instance_id).count() as u64;
        }
        count
    }
}

/// Tight bounding box of one instance's pixels (max side exclusive).
pub fn mask_to_bbox(mask: &InstanceMask, instance_id: u16) -> Result<BBox, GeometryError> {
    if instance_id == 0 || instance_id > mask.instance_count() {
        return Err(GeometryError::UnknownInstance(instance_id));
    }
    let mut min_x = u32::MAX;
    let mut min_y = u32::MAX;
    let mut max_x = 0u32;
    let mut max_y = 0u32;
    let w = mask.width as usize;
    for (i, &label) in mask.labels.iter().enumerate() {
        if label == instance_id {
            let x = (i % w) as u32;
            let y = (i / w) as u32;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    // Density validation guarantees at least one pixel carries the label.
    BBox::new(min_x, min_y, max_x + 1, max_y + 1)
}
