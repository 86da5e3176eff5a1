//! Manifest-driven patch dataset generation.

use super::{io_err, with_clean_out_dir, WorkflowError};
use crate::annotation::{resolve_path, write_voc_file, AnnotatedImage, DatasetManifest};
use crate::patch::{pipeline_with_counts, Patch, PipelineConfig, StageCounts};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Options for [`patchify`].
#[derive(Debug, Clone)]
pub struct PatchifyArgs {
    pub config: PipelineConfig,
    /// Worker threads for the per-image pipeline.
    pub jobs: usize,
    /// Load instances from annotation XML files instead of masks.
    pub annotation_only: bool,
    /// Also write cropped image rasters (requires source image files).
    pub crop_images: bool,
}

impl Default for PatchifyArgs {
    fn default() -> Self {
        Self {
            config: PipelineConfig::default(),
            jobs: 1,
            annotation_only: false,
            crop_images: false,
        }
    }
}

/// One entry of the patch manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchRecord {
    pub id: String,
    pub source: String,
    pub x: u32,
    pub y: u32,
    pub size: u32,
    pub annotation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
}

/// Index of a generated patch dataset, written as `patches.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchManifest {
    pub config: PipelineConfig,
    pub patches: Vec<PatchRecord>,
}

impl PatchManifest {
    pub fn load(path: &Path) -> Result<Self, WorkflowError> {
        let raw = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&raw).map_err(|source| WorkflowError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), WorkflowError> {
        let mut body = serde_json::to_string_pretty(self).expect("patch manifest serializes");
        body.push('\n');
        std::fs::write(path, body).map_err(io_err(path))
    }
}

/// Aggregate stage counts over the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PatchifySummary {
    pub images: u64,
    pub counts: StageCounts,
}

fn crop_raster(
    record_id: &str,
    image_path: &Path,
    patches: &[Patch],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, WorkflowError> {
    if !image_path.exists() {
        return Err(WorkflowError::MissingImageFile(
            record_id.to_string(),
            image_path.to_path_buf(),
        ));
    }
    let raster = image::open(image_path).map_err(|e| WorkflowError::Annotation(
        crate::annotation::AnnotationError::Mask {
            path: image_path.to_path_buf(),
            reason: e.to_string(),
        },
    ))?;
    let mut written = Vec::with_capacity(patches.len());
    for patch in patches {
        let crop = raster.crop_imm(patch.x, patch.y, patch.size, patch.size);
        let rel = PathBuf::from("images").join(format!("{}.png", patch.patch_id()));
        let path = out_dir.join(&rel);
        crop.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| WorkflowError::Annotation(crate::annotation::AnnotationError::Mask {
                path: path.clone(),
                reason: e.to_string(),
            }))?;
        written.push(rel);
    }
    Ok(written)
}

/// Tiles every manifest image into annotated patches on disk.
///
/// Writes one VOC XML per kept patch under `annotations/`, optional image
/// crops under `images/`, and the patch manifest as `patches.json`. On
/// any failure the partially written output directory is removed.
pub fn patchify(
    manifest_path: &Path,
    out_dir: &Path,
    args: &PatchifyArgs,
) -> Result<PatchifySummary, WorkflowError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();

    with_clean_out_dir(out_dir, || {
        let ann_dir = out_dir.join("annotations");
        std::fs::create_dir_all(&ann_dir).map_err(io_err(&ann_dir))?;
        if args.crop_images {
            let img_dir = out_dir.join("images");
            std::fs::create_dir_all(&img_dir).map_err(io_err(&img_dir))?;
        }

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs.max(1))
            .build()
            .expect("worker pool builds");

        // Per-image work is independent; results come back in manifest
        // order so the patch manifest is deterministic.
        let per_image: Vec<(Vec<PatchRecord>, StageCounts)> = pool.install(|| {
            manifest
                .images
                .par_iter()
                .map(|record| {
                    let data = record.load_instances(&base, args.annotation_only)?;
                    let image = AnnotatedImage {
                        id: record.id.clone(),
                        width: record.width,
                        height: record.height,
                        view: record.view,
                        instances: data.instances,
                    };
                    let (patches, counts) =
                        pipeline_with_counts(&image, &args.config, data.mask.as_ref())?;

                    let mut crops = if args.crop_images {
                        let image_path = resolve_path(&base, &record.image);
                        crop_raster(&record.id, &image_path, &patches, out_dir)?
                            .into_iter()
                            .map(Some)
                            .collect()
                    } else {
                        vec![None; patches.len()]
                    };

                    let mut records = Vec::with_capacity(patches.len());
                    for (i, patch) in patches.iter().enumerate() {
                        let rel = PathBuf::from("annotations")
                            .join(format!("{}.xml", patch.patch_id()));
                        write_voc_file(&patch.to_annotated_image(), &out_dir.join(&rel))?;
                        records.push(PatchRecord {
                            id: patch.patch_id(),
                            source: patch.source_id.clone(),
                            x: patch.x,
                            y: patch.y,
                            size: patch.size,
                            annotation: rel,
                            image: crops[i].take(),
                        });
                    }
                    Ok::<_, WorkflowError>((records, counts))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;

        let mut summary = PatchifySummary {
            images: manifest.images.len() as u64,
            counts: StageCounts::default(),
        };
        let mut patches = Vec::new();
        for (records, counts) in per_image {
            summary.counts.windows += counts.windows;
            summary.counts.cropped_instances += counts.cropped_instances;
            summary.counts.after_merge += counts.after_merge;
            summary.counts.after_removal += counts.after_removal;
            summary.counts.kept_patches += counts.kept_patches;
            summary.counts.discarded_patches += counts.discarded_patches;
            patches.extend(records);
        }

        PatchManifest {
            config: args.config.clone(),
            patches,
        }
        .save(&out_dir.join("patches.json"))?;
        Ok(summary)
    })
}
