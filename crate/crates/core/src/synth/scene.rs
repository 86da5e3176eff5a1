//! Synthetic scene generation.
//!
//! Each cluster is an elliptical blob of at least six overlapping dots
//! (chained so the blob is one 8-connected component), painted into a
//! label map. Dots are anchored at the ellipse extremes so a blob's tight
//! bounding box equals its planned box, which lets placement control box
//! gaps exactly: a configurable fraction of clusters is placed within
//! merge distance of a neighbor, and another fraction straddles patch
//! grid lines leaving a thin sliver on one side.

use super::SynthError;
use crate::annotation::{extract_clusters_with_mask, AnnotatedImage, View};
use crate::geometry::{bbox_gap_squared, BBox, InstanceMask};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

/// Scene generator parameters. Deterministic given `seed`.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub min_clusters: u32,
    pub max_clusters: u32,
    /// Log-normal target blob area: `ln` mean and sigma. The defaults give
    /// a right-skewed area distribution with median well below mean.
    pub area_log_mean: f64,
    pub area_log_sigma: f64,
    /// Fraction of clusters placed within merge distance (<= 10 px gap)
    /// of an already-placed cluster.
    pub neighbor_fraction: f64,
    /// Fraction of clusters straddling a patch grid line with a thin tail.
    pub border_fraction: f64,
    /// Spacing of the grid lines used for border placement; matches the
    /// default patch stride.
    pub border_grid: u32,
    /// Radius of one aphid dot in pixels.
    pub dot_radius: u32,
    pub view: View,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 1200,
            height: 1200,
            min_clusters: 26,
            max_clusters: 36,
            area_log_mean: 7.87, // median ~2600 px
            area_log_sigma: 1.0,
            neighbor_fraction: 0.35,
            border_fraction: 0.30,
            border_grid: 200,
            dot_radius: 3,
            view: View::View1,
            seed: 0,
        }
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let fraction_ok = |v: f64| (0.0..=1.0).contains(&v);
        if !fraction_ok(self.neighbor_fraction) || !fraction_ok(self.border_fraction) {
            return Err(SynthError::InvalidConfig(
                "fractions must lie in [0, 1]".into(),
            ));
        }
        if self.neighbor_fraction + self.border_fraction > 1.0 {
            return Err(SynthError::InvalidConfig(
                "neighbor_fraction + border_fraction must not exceed 1".into(),
            ));
        }
        if self.min_clusters > self.max_clusters {
            return Err(SynthError::InvalidConfig(
                "min_clusters exceeds max_clusters".into(),
            ));
        }
        if self.width < 64 || self.height < 64 {
            return Err(SynthError::InvalidConfig("image too small".into()));
        }
        if self.dot_radius == 0 || self.border_grid == 0 {
            return Err(SynthError::InvalidConfig(
                "dot_radius and border_grid must be positive".into(),
            ));
        }
        if self.max_clusters >= u32::from(u16::MAX) {
            return Err(SynthError::InvalidConfig(
                "cluster count exceeds the 16-bit label space".into(),
            ));
        }
        Ok(())
    }
}

/// A blob planned but not yet painted: center plus ellipse half-extents.
struct PlannedBlob {
    cx: u32,
    cy: u32,
    semi_x: u32,
    semi_y: u32,
    dots: usize,
}

impl PlannedBlob {
    fn extent_x(&self, r: u32) -> u32 {
        self.semi_x + r
    }

    fn extent_y(&self, r: u32) -> u32 {
        self.semi_y + r
    }

    /// Tight box of the painted blob (anchor dots reach the extremes).
    fn bbox(&self, r: u32) -> BBox {
        BBox::new(
            self.cx - self.extent_x(r),
            self.cy - self.extent_y(r),
            self.cx + self.extent_x(r) + 1,
            self.cy + self.extent_y(r) + 1,
        )
        .expect("blob extents are positive")
    }
}

fn gap_at_most(a: &BBox, b: &BBox, px: u64) -> bool {
    bbox_gap_squared(a, b) <= px * px
}

fn draw_blob_shape(rng: &mut ChaCha8Rng, config: &SceneConfig) -> (u32, u32, usize) {
    let area_dist = LogNormal::new(config.area_log_mean, config.area_log_sigma)
        .expect("sigma is finite and positive");
    let area = area_dist.sample(rng).clamp(120.0, 25_000.0);
    let aspect = rng.random_range(0.6..1.7);
    let r = config.dot_radius as f64;
    let semi_x = (area * aspect / std::f64::consts::PI).sqrt().round();
    let semi_y = (area / (aspect * std::f64::consts::PI)).sqrt().round();
    let max_semi = (config.width.min(config.height) / 8).max(6) as f64;
    let semi_x = semi_x.clamp(4.0, max_semi) as u32;
    let semi_y = semi_y.clamp(4.0, max_semi) as u32;
    let dot_area = std::f64::consts::PI * r * r;
    let dots = ((area / (dot_area * 0.6)) as usize).clamp(2, 400);
    (semi_x, semi_y, dots)
}

enum Placement {
    Free,
    Neighbor,
    Border,
}

fn pick_placement(rng: &mut ChaCha8Rng, config: &SceneConfig, any_placed: bool) -> Placement {
    let draw: f64 = rng.random();
    if draw < config.neighbor_fraction && any_placed {
        Placement::Neighbor
    } else if draw < config.neighbor_fraction + config.border_fraction {
        Placement::Border
    } else {
        Placement::Free
    }
}

/// Minimum gap kept between unrelated blobs so only deliberate neighbor
/// placements fall within the 10 px merge distance.
const SEPARATION_PX: u64 = 12;

fn try_place(
    rng: &mut ChaCha8Rng,
    config: &SceneConfig,
    placed: &[BBox],
    semi_x: u32,
    semi_y: u32,
    dots: usize,
) -> Option<PlannedBlob> {
    let r = config.dot_radius;
    let ex = semi_x + r;
    let ey = semi_y + r;
    if 2 * ex + 2 >= config.width || 2 * ey + 2 >= config.height {
        return None;
    }
    let blob = |cx: u32, cy: u32| PlannedBlob {
        cx,
        cy,
        semi_x,
        semi_y,
        dots,
    };

    match pick_placement(rng, config, !placed.is_empty()) {
        Placement::Neighbor => {
            let anchor = placed[rng.random_range(0..placed.len())];
            let gap = rng.random_range(0..=10u32);
            // Pick a side; overlap the other axis so the box gap equals
            // the chosen per-axis gap exactly.
            let horizontal = rng.random_bool(0.5);
            let (cx, cy) = if horizontal {
                let right = rng.random_bool(0.5);
                let cx = if right {
                    anchor.max_x().checked_add(gap + ex)?
                } else {
                    anchor.min_x().checked_sub(gap + ex + 1)?
                };
                let lo = anchor.min_y().saturating_sub(ey);
                let hi = (anchor.max_y() - 1).saturating_add(ey);
                (cx, rng.random_range(lo..=hi))
            } else {
                let below = rng.random_bool(0.5);
                let cy = if below {
                    anchor.max_y().checked_add(gap + ey)?
                } else {
                    anchor.min_y().checked_sub(gap + ey + 1)?
                };
                let lo = anchor.min_x().saturating_sub(ex);
                let hi = (anchor.max_x() - 1).saturating_add(ex);
                (rng.random_range(lo..=hi), cy)
            };
            if cx < ex || cy < ey || cx + ex + 1 > config.width || cy + ey + 1 > config.height {
                return None;
            }
            let candidate = blob(cx, cy);
            let bbox = candidate.bbox(r);
            // Must not overlap anything; gaps to non-anchor blobs are free
            // to be small, the merge stage handles transitivity.
            let clear = placed
                .iter()
                .all(|other| *other == anchor || !gap_at_most(&bbox, other, 0));
            (clear && gap_at_most(&bbox, &anchor, u64::from(gap))).then_some(candidate)
        }
        Placement::Border => {
            let tail = rng.random_range(3..=12u32);
            let along_x = rng.random_bool(0.5);
            let (dim, extent) = if along_x {
                (config.width, ex)
            } else {
                (config.height, ey)
            };
            // Keep the line at a window start (line <= dim - patch for the
            // default patch = 2 * stride) so one window sees the sliver.
            let max_line = (dim / config.border_grid).saturating_sub(2);
            if max_line < 1 {
                return None;
            }
            let line = config.border_grid * rng.random_range(1..=max_line);
            // The blob ends `tail` pixels past the grid line, so the
            // window whose edge sits on the line keeps a thin sliver.
            let center = (line + tail).checked_sub(extent + 1)?;
            if tail > 2 * extent {
                return None;
            }
            let (cx, cy) = if along_x {
                let cy = rng.random_range(ey..config.height - ey - 1);
                (center, cy)
            } else {
                let cx = rng.random_range(ex..config.width - ex - 1);
                (cx, center)
            };
            if cx < ex || cy < ey || cx + ex + 1 > config.width || cy + ey + 1 > config.height {
                return None;
            }
            let candidate = blob(cx, cy);
            let bbox = candidate.bbox(r);
            placed
                .iter()
                .all(|other| !gap_at_most(&bbox, other, SEPARATION_PX))
                .then_some(candidate)
        }
        Placement::Free => {
            let cx = rng.random_range(ex..config.width - ex - 1);
            let cy = rng.random_range(ey..config.height - ey - 1);
            let candidate = blob(cx, cy);
            let bbox = candidate.bbox(r);
            placed
                .iter()
                .all(|other| !gap_at_most(&bbox, other, SEPARATION_PX))
                .then_some(candidate)
        }
    }
}

fn paint_disk(labels: &mut [u16], width: u32, cx: i64, cy: i64, r: i64, label: u16) {
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                let x = cx + dx;
                let y = cy + dy;
                // Placement margins keep the blob inside the image.
                labels[(y as u64 * u64::from(width) + x as u64) as usize] = label;
            }
        }
    }
}

fn paint_blob(labels: &mut [u16], config: &SceneConfig, blob: &PlannedBlob, label: u16, rng: &mut ChaCha8Rng) {
    let r = i64::from(config.dot_radius);
    let (cx, cy) = (i64::from(blob.cx), i64::from(blob.cy));
    let (sx, sy) = (i64::from(blob.semi_x), i64::from(blob.semi_y));

    // Anchor dots at the ellipse extremes pin the tight bounding box to
    // the planned one.
    let mut centers: Vec<(i64, i64)> = vec![
        (cx - sx, cy),
        (cx + sx, cy),
        (cx, cy - sy),
        (cx, cy + sy),
    ];
    let random_dots = blob.dots.max(6).saturating_sub(centers.len());
    for _ in 0..random_dots {
        loop {
            let dx = rng.random_range(-sx..=sx);
            let dy = rng.random_range(-sy..=sy);
            let fx = dx as f64 / sx as f64;
            let fy = dy as f64 / sy as f64;
            if fx * fx + fy * fy <= 1.0 {
                centers.push((cx + dx, cy + dy));
                break;
            }
        }
    }

    // Chain every dot to the nearest already-connected dot so the blob is
    // one 8-connected component.
    let mut connected: Vec<(i64, i64)> = vec![centers[0]];
    paint_disk(labels, config.width, centers[0].0, centers[0].1, r, label);
    for &(x, y) in &centers[1..] {
        let &(nx, ny) = connected
            .iter()
            .min_by_key(|&&(px, py)| (px - x) * (px - x) + (py - y) * (py - y))
            .expect("connected set is non-empty");
        let dist = (((nx - x) * (nx - x) + (ny - y) * (ny - y)) as f64).sqrt();
        let steps = (dist / r.max(1) as f64).ceil() as i64;
        for step in 0..=steps {
            let t = if steps == 0 { 0.0 } else { step as f64 / steps as f64 };
            let ix = x as f64 + (nx - x) as f64 * t;
            let iy = y as f64 + (ny - y) as f64 * t;
            paint_disk(labels, config.width, ix.round() as i64, iy.round() as i64, r, label);
        }
        connected.push((x, y));
    }
}

/// Generates one synthetic annotated scene and its instance mask.
///
/// Instances are derived from the painted mask by cluster extraction, so
/// ids, boxes and areas are exactly what any consumer re-deriving them
/// from the mask file would see. Identical configs produce identical
/// scenes byte for byte.
pub fn gen_scene(config: &SceneConfig) -> Result<(AnnotatedImage, InstanceMask), SynthError> {
    gen_scene_with_id(config, &format!("synth_{:016x}", config.seed))
}

/// [`gen_scene`] with an explicit image id.
pub fn gen_scene_with_id(
    config: &SceneConfig,
    image_id: &str,
) -> Result<(AnnotatedImage, InstanceMask), SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let count = rng.random_range(config.min_clusters..=config.max_clusters);

    let mut planned: Vec<PlannedBlob> = Vec::with_capacity(count as usize);
    let mut boxes: Vec<BBox> = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let (semi_x, semi_y, dots) = draw_blob_shape(&mut rng, config);
        let mut blob = None;
        for _ in 0..400 {
            if let Some(found) = try_place(&mut rng, config, &boxes, semi_x, semi_y, dots) {
                blob = Some(found);
                break;
            }
        }
        match blob {
            Some(b) => {
                boxes.push(b.bbox(config.dot_radius));
                planned.push(b);
            }
            None => {
                return Err(SynthError::PlacementFailed {
                    placed: planned.len() as u32,
                    requested: count,
                })
            }
        }
    }

    let mut labels = vec![0u16; config.width as usize * config.height as usize];
    for (i, blob) in planned.iter().enumerate() {
        paint_blob(&mut labels, config, blob, i as u16 + 1, &mut rng);
    }
    let raw = InstanceMask::from_labels(config.width, config.height, labels)
        .expect("painted labels are dense");
    let (instances, mask) = extract_clusters_with_mask(&raw);

    Ok((
        AnnotatedImage {
            id: image_id.to_string(),
            width: config.width,
            height: config.height,
            view: config.view,
            instances,
        },
        mask,
    ))
}
