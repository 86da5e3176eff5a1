//! Annotation cropping, box merging, tiny-fragment removal.

use super::{plan_grid, PatchError, PatchGrid};
use crate::annotation::{AnnotatedImage, ClusterInstance, InstanceSource, View};
use crate::geometry::{merge_groups, BBox, InstanceMask};
use serde::{Deserialize, Serialize};

/// One window of a source image with patch-local annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub source_id: String,
    pub x: u32,
    pub y: u32,
    pub size: u32,
    pub view: View,
    pub instances: Vec<ClusterInstance>,
}

impl Patch {
    /// Canonical patch name: `<image_id>_x<offset>_y<offset>`.
    pub fn patch_id(&self) -> String {
        format!("{}_x{}_y{}", self.source_id, self.x, self.y)
    }

    /// The patch viewed as a standalone annotated image.
    pub fn to_annotated_image(&self) -> AnnotatedImage {
        AnnotatedImage {
            id: self.patch_id(),
            width: self.size,
            height: self.size,
            view: self.view,
            instances: self.instances.clone(),
        }
    }
}

/// Recovers `(image_id, x, y)` from a canonical patch id.
pub fn split_patch_id(patch_id: &str) -> Option<(&str, u32, u32)> {
    let (rest, y) = patch_id.rsplit_once("_y")?;
    let (image, x) = rest.rsplit_once("_x")?;
    Some((image, x.parse().ok()?, y.parse().ok()?))
}

fn default_patch() -> u32 {
    400
}

fn default_stride() -> u32 {
    200
}

fn default_merge_px() -> f64 {
    10.0
}

fn default_min_fraction() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

/// Pipeline stage configuration. The three study conditions map to the
/// toggles: original (`merge=false, remove_tiny=false`), "+merge 10"
/// (`merge=true`), "+rm 0.01" (`merge=true, remove_tiny=true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_patch")]
    pub patch: u32,
    #[serde(default = "default_stride")]
    pub stride: u32,
    /// Boxes closer than this many pixels are merged.
    #[serde(default = "default_merge_px")]
    pub merge_px: f64,
    /// Instances smaller than this fraction of the patch area are removed.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    #[serde(default = "default_true")]
    pub merge: bool,
    #[serde(default = "default_true")]
    pub remove_tiny: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            patch: default_patch(),
            stride: default_stride(),
            merge_px: default_merge_px(),
            min_fraction: default_min_fraction(),
            merge: true,
            remove_tiny: true,
        }
    }
}

impl PipelineConfig {
    /// The unprocessed-labels condition.
    pub fn original(mut self) -> Self {
        self.merge = false;
        self.remove_tiny = false;
        self
    }

    /// Merging enabled, tiny removal disabled.
    pub fn merge_only(mut self) -> Self {
        self.merge = true;
        self.remove_tiny = false;
        self
    }
}

/// Instance totals after each pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub windows: u64,
    pub cropped_instances: u64,
    pub after_merge: u64,
    pub after_removal: u64,
    pub kept_patches: u64,
    pub discarded_patches: u64,
}

/// Clips every instance box into every grid window.
///
/// Instances keep their image-level ids; an instance whose box was cut by
/// the window boundary is marked `clipped`. When the re-labeled mask from
/// cluster extraction is given, clipped areas are recounted from its
/// pixels; otherwise they are scaled by the box-area ratio.
pub fn crop_annotations(
    image: &AnnotatedImage,
    grid: &PatchGrid,
    mask: Option<&InstanceMask>,
) -> Vec<Patch> {
    let patch = grid.patch();
    grid.offsets()
        .iter()
        .map(|&(x0, y0)| {
            let window = BBox::new(x0, y0, x0 + patch, y0 + patch)
                .expect("grid windows are non-empty");
            let instances = image
                .instances
                .iter()
                .filter_map(|inst| clip_instance(inst, &window, x0, y0, mask))
                .collect();
            Patch {
                source_id: image.id.clone(),
                x: x0,
                y: y0,
                size: patch,
                view: image.view,
                instances,
            }
        })
        .collect()
}

fn clip_instance(
    inst: &ClusterInstance,
    window: &BBox,
    x0: u32,
    y0: u32,
    mask: Option<&InstanceMask>,
) -> Option<ClusterInstance> {
    let clipped_box = inst.bbox.intersection(window)?;
    let clipped = clipped_box != inst.bbox;
    let local = clipped_box
        .translated(-i64::from(x0), -i64::from(y0))
        .expect("intersection lies inside the window");
    if !clipped {
        return Some(ClusterInstance {
            id: inst.id,
            bbox: local,
            area: inst.area,
            source: inst.source,
        });
    }

    let area = match mask {
        Some(mask) if inst.id <= u32::from(u16::MAX) => {
            debug_assert_eq!(
                mask.area(inst.id as u16).ok(),
                inst.area,
                "mask labels must correspond to instance ids"
            );
            match mask.count_in_window(inst.id as u16, &clipped_box) {
                0 => None,
                n => Some(n),
            }
        }
        _ => inst.area.map(|full| {
            let scaled =
                full as f64 * clipped_box.area() as f64 / inst.bbox.area() as f64;
            (scaled.round() as u64).max(1)
        }),
    };
    Some(ClusterInstance {
        id: inst.id,
        bbox: local,
        area,
        source: InstanceSource::Clipped,
    })
}

/// Merges instances whose boxes sit within `threshold` pixels of each
/// other, transitively. Merged outputs are renumbered `1..=N` in
/// `(min_y, min_x)` order; a merged instance sums its members' mask areas
/// when all are known.
pub fn merge_patch_instances(patch: Patch, threshold: f64) -> Patch {
    let boxes: Vec<BBox> = patch.instances.iter().map(|i| i.bbox).collect();
    let groups = merge_groups(&boxes, threshold);
    let instances = groups
        .into_iter()
        .enumerate()
        .map(|(idx, (hull, members))| {
            let id = idx as u32 + 1;
            if members.len() == 1 {
                let original = &patch.instances[members[0]];
                ClusterInstance { id, ..original.clone() }
            } else {
                let area = members
                    .iter()
                    .map(|&m| patch.instances[m].area)
                    .sum::<Option<u64>>();
                ClusterInstance {
                    id,
                    bbox: hull,
                    area,
                    source: InstanceSource::Merged,
                }
            }
        })
        .collect();
    Patch { instances, ..patch }
}

/// Removes instances whose area (mask pixels when known, box area
/// otherwise) is strictly below `min_fraction` of the patch area. For a
/// 400×400 patch at the default 1% the cut sits at 1,600 px: 1,599 goes,
/// 1,600 stays.
pub fn filter_tiny(patch: Patch, min_fraction: f64) -> Patch {
    let cut = min_fraction * (patch.size as f64) * (patch.size as f64);
    let instances = patch
        .instances
        .into_iter()
        .filter(|inst| inst.effective_area() as f64 >= cut)
        .collect();
    Patch { instances, ..patch }
}

/// Keeps only patches that still hold at least one instance.
pub fn discard_empty(patches: Vec<Patch>) -> Vec<Patch> {
    patches.into_iter().filter(|p| !p.instances.is_empty()).collect()
}

/// Full pipeline: plan grid, crop, optionally merge, optionally remove
/// tiny fragments, discard empty patches.
pub fn pipeline(
    image: &AnnotatedImage,
    config: &PipelineConfig,
    mask: Option<&InstanceMask>,
) -> Result<Vec<Patch>, PatchError> {
    pipeline_with_counts(image, config, mask).map(|(patches, _)| patches)
}

/// [`pipeline`] plus per-stage instance counts for reporting.
pub fn pipeline_with_counts(
    image: &AnnotatedImage,
    config: &PipelineConfig,
    mask: Option<&InstanceMask>,
) -> Result<(Vec<Patch>, StageCounts), PatchError> {
    let grid = plan_grid(image.width, image.height, config.patch, config.stride)?;
    let mut counts = StageCounts {
        windows: grid.len() as u64,
        ..StageCounts::default()
    };

    let mut patches = crop_annotations(image, &grid, mask);
    counts.cropped_instances = patches.iter().map(|p| p.instances.len() as u64).sum();

    if config.merge {
        patches = patches
            .into_iter()
            .map(|p| merge_patch_instances(p, config.merge_px))
            .collect();
    }
    counts.after_merge = patches.iter().map(|p| p.instances.len() as u64).sum();

    if config.remove_tiny {
        patches = patches
            .into_iter()
            .map(|p| filter_tiny(p, config.min_fraction))
            .collect();
    }
    counts.after_removal = patches.iter().map(|p| p.instances.len() as u64).sum();

    let total = patches.len() as u64;
    let patches = discard_empty(patches);
    counts.kept_patches = patches.len() as u64;
    counts.discarded_patches = total - counts.kept_patches;
    Ok((patches, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: u32, b: (u32, u32, u32, u32), area: Option<u64>) -> ClusterInstance {
        ClusterInstance {
            id,
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            area,
            source: InstanceSource::Labeled,
        }
    }

    fn image(width: u32, height: u32, instances: Vec<ClusterInstance>) -> AnnotatedImage {
        AnnotatedImage {
            id: "img".into(),
            width,
            height,
            view: View::View1,
            instances,
        }
    }

    fn patch_of(instances: Vec<ClusterInstance>) -> Patch {
        Patch {
            source_id: "img".into(),
            x: 0,
            y: 0,
            size: 400,
            view: View::View1,
            instances,
        }
    }

    #[test]
    fn interior_instance_is_unclipped_in_its_patch() {
        let img = image(800, 400, vec![inst(1, (50, 50, 150, 150), Some(5000))]);
        let grid = plan_grid(800, 400, 400, 200).unwrap();
        let patches = crop_annotations(&img, &grid, None);
        let home = &patches[0];
        assert_eq!(home.instances.len(), 1);
        assert_eq!(home.instances[0].source, InstanceSource::Labeled);
        assert_eq!(home.instances[0].area, Some(5000));
        assert_eq!(home.instances[0].bbox, BBox::new(50, 50, 150, 150).unwrap());
    }

    #[test]
    fn straddling_instance_is_clipped_at_edges_and_whole_in_the_middle() {
        // 100-wide box centred on x=400, the boundary between the x=0 and
        // x=400 windows; the x=200 window holds it fully.
        let img = image(800, 400, vec![inst(1, (350, 100, 450, 200), Some(10_000))]);
        let grid = plan_grid(800, 400, 400, 200).unwrap();
        let patches = crop_annotations(&img, &grid, None);
        assert_eq!(grid.offsets(), &[(0, 0), (200, 0), (400, 0)]);

        let left = &patches[0].instances[0];
        assert_eq!(left.source, InstanceSource::Clipped);
        assert_eq!(left.bbox, BBox::new(350, 100, 400, 200).unwrap());
        assert_eq!(left.area, Some(5000)); // half the box-scaled area

        let middle = &patches[1].instances[0];
        assert_eq!(middle.source, InstanceSource::Labeled);
        assert_eq!(middle.bbox, BBox::new(150, 100, 250, 200).unwrap());

        let right = &patches[2].instances[0];
        assert_eq!(right.source, InstanceSource::Clipped);
        assert_eq!(right.bbox, BBox::new(0, 100, 50, 200).unwrap());
    }

    #[test]
    fn instance_outside_window_is_absent() {
        let img = image(800, 400, vec![inst(1, (600, 0, 700, 100), None)]);
        let grid = plan_grid(800, 400, 400, 200).unwrap();
        let patches = crop_annotations(&img, &grid, None);
        assert!(patches[0].instances.is_empty());
        assert!(!patches[2].instances.is_empty());
    }

    #[test]
    fn clipped_area_recounted_from_mask() {
        // Instance 1 occupies only the left half of its box; clipping the
        // right half must count zero pixels, not half the box.
        let width = 500u32;
        let mut labels = vec![0u16; (width * 400) as usize];
        for y in 0..100u32 {
            for x in 380..400u32 {
                labels[(y * width + x) as usize] = 1;
            }
        }
        let mask = InstanceMask::from_labels(width, 400, labels).unwrap();
        let img = image(500, 400, vec![inst(1, (380, 0, 440, 100), Some(2000))]);
        let grid = plan_grid(500, 400, 400, 200).unwrap();
        let patches = crop_annotations(&img, &grid, Some(&mask));
        // Window x=0 clips to [380,400): all 2000 labeled pixels.
        assert_eq!(patches[0].instances[0].area, Some(2000));
        // Window x=100 holds the whole box: unclipped, original area.
        assert_eq!(patches[1].instances[0].source, InstanceSource::Labeled);
    }

    #[test]
    fn tiny_filter_is_strict_at_the_boundary() {
        let patch = patch_of(vec![
            inst(1, (0, 0, 100, 16), Some(1599)),
            inst(2, (200, 0, 300, 16), Some(1600)),
        ]);
        let kept = filter_tiny(patch, 0.01);
        assert_eq!(kept.instances.len(), 1);
        assert_eq!(kept.instances[0].id, 2);
    }

    #[test]
    fn tiny_filter_falls_back_to_box_area() {
        let patch = patch_of(vec![
            inst(1, (0, 0, 40, 40), None),   // 1600 box px: kept
            inst(2, (100, 0, 139, 40), None), // 1560 box px: removed
        ]);
        let kept = filter_tiny(patch, 0.01);
        assert_eq!(kept.instances.len(), 1);
        assert_eq!(kept.instances[0].id, 1);
    }

    #[test]
    fn discard_empty_keeps_order() {
        let a = patch_of(vec![inst(1, (0, 0, 50, 50), None)]);
        let b = patch_of(vec![]);
        let c = patch_of(vec![inst(2, (0, 0, 50, 50), None)]);
        let kept = discard_empty(vec![a.clone(), b, c.clone()]);
        assert_eq!(kept, vec![a, c]);
    }

    #[test]
    fn merge_renumbers_and_sums_areas() {
        let patch = patch_of(vec![
            inst(7, (0, 0, 10, 10), Some(80)),
            inst(9, (20, 0, 30, 10), Some(70)),
            inst(4, (200, 200, 250, 250), Some(2000)),
        ]);
        let merged = merge_patch_instances(patch, 10.0);
        assert_eq!(merged.instances.len(), 2);
        let joined = &merged.instances[0];
        assert_eq!(joined.id, 1);
        assert_eq!(joined.bbox, BBox::new(0, 0, 30, 10).unwrap());
        assert_eq!(joined.area, Some(150));
        assert_eq!(joined.source, InstanceSource::Merged);
        assert_eq!(merged.instances[1].source, InstanceSource::Labeled);
    }

    #[test]
    fn pipeline_toggles_reproduce_conditions() {
        // One pair of close boxes plus one 900px border sliver.
        let img = image(
            400,
            400,
            vec![
                inst(1, (0, 0, 60, 60), Some(3000)),
                inst(2, (70, 0, 130, 60), Some(3000)),
                inst(3, (390, 200, 400, 290), Some(900)),
            ],
        );
        let config = PipelineConfig::default();

        let (original, counts) =
            pipeline_with_counts(&img, &config.clone().original(), None).unwrap();
        assert_eq!(counts.windows, 1);
        assert_eq!(original[0].instances.len(), 3);

        let merged = pipeline(&img, &config.clone().merge_only(), None).unwrap();
        assert_eq!(merged[0].instances.len(), 2);
        assert!(merged[0].instances.iter().any(|i| i.area == Some(900)));

        let removed = pipeline(&img, &config, None).unwrap();
        assert_eq!(removed[0].instances.len(), 1);
        assert_eq!(removed[0].instances[0].area, Some(6000));
    }

    #[test]
    fn pipeline_drops_patch_emptied_by_tiny_filter() {
        let img = image(800, 400, vec![inst(1, (500, 100, 520, 130), Some(600))]);
        let config = PipelineConfig::default();
        let kept = pipeline(&img, &config, None).unwrap();
        assert!(kept.is_empty());
        let (_, counts) = pipeline_with_counts(&img, &config, None).unwrap();
        assert_eq!(counts.discarded_patches, counts.windows);
    }

    #[test]
    fn patch_ids_parse_back() {
        let patch = Patch {
            source_id: "field_y2_cam1".into(),
            x: 200,
            y: 2336,
            size: 400,
            view: View::View3,
            instances: vec![],
        };
        assert_eq!(patch.patch_id(), "field_y2_cam1_x200_y2336");
        assert_eq!(
            split_patch_id(&patch.patch_id()),
            Some(("field_y2_cam1", 200, 2336))
        );
        assert_eq!(split_patch_id("noxy"), None);
    }
}
