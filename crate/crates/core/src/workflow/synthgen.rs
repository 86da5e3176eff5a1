//! Synthetic dataset generation on disk.

use super::{io_err, with_clean_out_dir, WorkflowError};
use crate::annotation::{save_mask_png, write_voc_file, DatasetManifest, ManifestImage, View};
use crate::eval::{write_predictions, Detection};
use crate::geometry::InstanceMask;
use crate::patch::{pipeline, PipelineConfig};
use crate::synth::{gen_scene_with_id, simulate_detector, DetectorNoise, SceneConfig};
use rayon::prelude::*;
use std::path::Path;

/// Options for [`synth_dataset`].
#[derive(Debug, Clone)]
pub struct SynthArgs {
    /// Number of images to generate; views cycle view1/view2/view3.
    pub images: u32,
    pub scene: SceneConfig,
    pub noise: DetectorNoise,
    /// Pipeline the simulated detector runs against; use the same
    /// settings when patchifying this dataset so prediction ids line up.
    pub pipeline: PipelineConfig,
    /// Render simple RGB rasters next to the masks.
    pub render_images: bool,
    /// Skip mask and raster files; only annotations and the manifest.
    pub annotation_only: bool,
    pub jobs: usize,
}

impl Default for SynthArgs {
    fn default() -> Self {
        Self {
            images: 3,
            scene: SceneConfig::default(),
            noise: DetectorNoise::default(),
            pipeline: PipelineConfig::default(),
            render_images: false,
            annotation_only: false,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthSummary {
    pub images: u64,
    pub clusters: u64,
    pub patches: u64,
    pub predictions: u64,
}

fn render_raster(mask: &InstanceMask, path: &Path) -> Result<(), WorkflowError> {
    let (w, h) = (mask.width(), mask.height());
    let mut raster = image::RgbImage::from_pixel(w, h, image::Rgb([97, 135, 62]));
    for y in 0..h {
        for x in 0..w {
            if mask.label_at(x, y) != 0 {
                raster.put_pixel(x, y, image::Rgb([74, 48, 38]));
            }
        }
    }
    raster
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| {
            WorkflowError::Annotation(crate::annotation::AnnotationError::Mask {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })
}

/// Generates a synthetic dataset: manifest, per-image annotation XML,
/// 16-bit mask PNGs (unless annotation-only), optional rendered rasters,
/// and a simulated prediction file aligned with the pipeline's patch ids.
pub fn synth_dataset(out_dir: &Path, args: &SynthArgs) -> Result<SynthSummary, WorkflowError> {
    with_clean_out_dir(out_dir, || {
        let ann_dir = out_dir.join("annotations");
        std::fs::create_dir_all(&ann_dir).map_err(io_err(&ann_dir))?;
        if !args.annotation_only {
            let mask_dir = out_dir.join("masks");
            std::fs::create_dir_all(&mask_dir).map_err(io_err(&mask_dir))?;
            if args.render_images {
                let img_dir = out_dir.join("images");
                std::fs::create_dir_all(&img_dir).map_err(io_err(&img_dir))?;
            }
        }

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs.max(1))
            .build()
            .expect("worker pool builds");

        struct PerImage {
            record: ManifestImage,
            clusters: u64,
            patches: u64,
            dets: Vec<Detection>,
        }

        let generated: Vec<PerImage> = pool.install(|| {
            (0..args.images)
                .into_par_iter()
                .map(|i| {
                    let id = format!("synth{i:03}");
                    let scene = SceneConfig {
                        seed: args.scene.seed.wrapping_add(u64::from(i)),
                        view: View::ALL[i as usize % View::ALL.len()],
                        ..args.scene.clone()
                    };
                    let (image, mask) = gen_scene_with_id(&scene, &id)?;

                    let ann_rel = format!("annotations/{id}.xml");
                    write_voc_file(&image, &out_dir.join(&ann_rel))?;

                    let mask_rel = format!("masks/{id}.png");
                    if !args.annotation_only {
                        save_mask_png(&mask, &out_dir.join(&mask_rel))?;
                        if args.render_images {
                            render_raster(&mask, &out_dir.join(format!("images/{id}.png")))?;
                        }
                    }

                    let patches = pipeline(&image, &args.pipeline, Some(&mask))?;
                    let noise = DetectorNoise {
                        seed: args.noise.seed.wrapping_add(u64::from(i)),
                        ..args.noise.clone()
                    };
                    let dets = simulate_detector(&patches, &noise);

                    Ok::<_, WorkflowError>(PerImage {
                        clusters: image.instances.len() as u64,
                        patches: patches.len() as u64,
                        record: ManifestImage {
                            id,
                            image: format!("images/{}.png", image.id).into(),
                            mask: (!args.annotation_only).then(|| mask_rel.into()),
                            annotation: Some(ann_rel.into()),
                            view: scene.view,
                            width: scene.width,
                            height: scene.height,
                        },
                        dets,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;

        let mut summary = SynthSummary {
            images: u64::from(args.images),
            ..SynthSummary::default()
        };
        let mut records = Vec::with_capacity(generated.len());
        let mut dets = Vec::new();
        for item in generated {
            summary.clusters += item.clusters;
            summary.patches += item.patches;
            records.push(item.record);
            dets.extend(item.dets);
        }
        summary.predictions = dets.len() as u64;

        DatasetManifest { images: records }.save(&out_dir.join("manifest.json"))?;
        write_predictions(&out_dir.join("predictions.jsonl"), &dets)?;
        Ok(summary)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{evaluate_files, patchify, EvaluateArgs, PatchifyArgs};

    fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(root).unwrap().display().to_string();
                    files.push((rel, std::fs::read(&path).unwrap()));
                }
            }
        }
        files.sort();
        files
    }

    fn small_args(seed: u64) -> SynthArgs {
        SynthArgs {
            images: 2,
            scene: SceneConfig {
                width: 800,
                height: 800,
                min_clusters: 6,
                max_clusters: 10,
                seed,
                ..SceneConfig::default()
            },
            ..SynthArgs::default()
        }
    }

    #[test]
    fn identical_seeds_give_identical_trees() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        synth_dataset(&a, &small_args(5)).unwrap();
        synth_dataset(&b, &small_args(5)).unwrap();
        assert_eq!(tree_bytes(&a), tree_bytes(&b));
    }

    #[test]
    fn generated_dataset_flows_through_patchify_and_evaluate() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let summary = synth_dataset(&data, &small_args(7)).unwrap();
        assert!(summary.clusters > 0);

        let patches_dir = dir.path().join("patches");
        let patchify_args = PatchifyArgs::default();
        let patch_summary =
            patchify(&data.join("manifest.json"), &patches_dir, &patchify_args).unwrap();
        assert_eq!(patch_summary.counts.kept_patches, summary.patches);

        let report = evaluate_files(
            &patches_dir.join("patches.json"),
            &data.join("predictions.jsonl"),
            &EvaluateArgs::default(),
            None,
        )
        .unwrap();
        let entry = &report.entries[0];
        assert!(entry.ap > 0.0 && entry.ap <= 1.0);
        assert_eq!(entry.tp + entry.missed, summary_instances(&patches_dir));
    }

    fn summary_instances(patches_dir: &Path) -> u64 {
        let manifest =
            crate::workflow::PatchManifest::load(&patches_dir.join("patches.json")).unwrap();
        manifest
            .patches
            .iter()
            .map(|p| {
                crate::annotation::read_voc_file(&patches_dir.join(&p.annotation))
                    .unwrap()
                    .instances
                    .len() as u64
            })
            .sum()
    }

    #[test]
    fn zero_cluster_dataset_patchifies_to_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let mut args = small_args(1);
        args.scene.min_clusters = 0;
        args.scene.max_clusters = 0;
        let summary = synth_dataset(&data, &args).unwrap();
        assert_eq!(summary.clusters, 0);
        assert_eq!(summary.patches, 0);
        assert_eq!(summary.predictions, 0);

        let patches_dir = dir.path().join("patches");
        let patch_summary = patchify(
            &data.join("manifest.json"),
            &patches_dir,
            &PatchifyArgs::default(),
        )
        .unwrap();
        assert_eq!(patch_summary.counts.kept_patches, 0);
    }

    #[test]
    fn annotation_only_skips_masks() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let mut args = small_args(2);
        args.annotation_only = true;
        synth_dataset(&data, &args).unwrap();
        assert!(!data.join("masks").exists());
        assert!(data.join("annotations/synth000.xml").exists());
        // Patchify must work from the annotations alone.
        let patches_dir = dir.path().join("patches");
        let patchify_args = PatchifyArgs {
            annotation_only: true,
            ..PatchifyArgs::default()
        };
        patchify(&data.join("manifest.json"), &patches_dir, &patchify_args).unwrap();
    }
}
