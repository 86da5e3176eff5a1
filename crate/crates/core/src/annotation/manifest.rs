//! Dataset manifest and label-map mask files.
//!
//! The manifest is one JSON document listing image records:
//! `{"images":[{"id":…,"image":…,"mask":…,"view":"view1","width":…,"height":…}]}`.
//! Masks are single-channel 16-bit PNG label maps (0 background, `k` is
//! instance `k`). Records may also point at a VOC XML annotation file,
//! which lets the pipeline run in annotation-only mode without masks.

use super::{
    extract_clusters_with_mask, read_voc_file, AnnotationError, ClusterInstance, View,
};
use crate::geometry::InstanceMask;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// One image record in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestImage {
    pub id: String,
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<PathBuf>,
    pub view: View,
    pub width: u32,
    pub height: u32,
}

/// The dataset manifest: a list of image records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub images: Vec<ManifestImage>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, AnnotationError> {
        let raw = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: DatasetManifest =
            serde_json::from_str(&raw).map_err(|source| AnnotationError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        let mut seen = BTreeSet::new();
        for record in &manifest.images {
            if !seen.insert(record.id.as_str()) {
                return Err(AnnotationError::DuplicateImageId(record.id.clone()));
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), AnnotationError> {
        let mut body = serde_json::to_string_pretty(self).expect("manifest serializes");
        body.push('\n');
        std::fs::write(path, body).map_err(|source| AnnotationError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Joins a manifest-relative path onto the manifest's directory.
pub fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a 16-bit single-channel PNG label map. 8-bit single-channel
/// maps are accepted with their raw values (label ids, not intensities,
/// so no rescaling).
pub fn load_mask_png(path: &Path) -> Result<InstanceMask, AnnotationError> {
    let mask_err = |reason: String| AnnotationError::Mask {
        path: path.to_path_buf(),
        reason,
    };
    let decoded = image::ImageReader::open(path)
        .map_err(|source| AnnotationError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| mask_err(e.to_string()))?;
    let (width, height, labels) = match decoded {
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            (w, h, buf.into_raw())
        }
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let labels = buf.into_raw().into_iter().map(u16::from).collect();
            (w, h, labels)
        }
        other => {
            return Err(mask_err(format!(
                "expected a single-channel label map, found {:?}",
                other.color()
            )))
        }
    };
    InstanceMask::from_labels(width, height, labels).map_err(|e| mask_err(e.to_string()))
}

/// Writes a label map as 16-bit single-channel PNG.
pub fn save_mask_png(mask: &InstanceMask, path: &Path) -> Result<(), AnnotationError> {
    let buffer: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::from_raw(mask.width(), mask.height(), mask.labels().to_vec())
            .expect("label buffer matches dimensions");
    buffer
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| AnnotationError::Mask {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Instances for one manifest record, with the re-labeled mask when the
/// instances came from one.
#[derive(Debug)]
pub struct InstanceData {
    pub instances: Vec<ClusterInstance>,
    pub mask: Option<InstanceMask>,
}

impl ManifestImage {
    /// Loads this record's cluster instances.
    ///
    /// Prefers the mask (pixel-accurate areas); with `annotation_only`, or
    /// when no mask is declared, falls back to the VOC annotation file.
    pub fn load_instances(
        &self,
        base: &Path,
        annotation_only: bool,
    ) -> Result<InstanceData, AnnotationError> {
        let from_annotation = |path: &PathBuf| -> Result<InstanceData, AnnotationError> {
            let record = read_voc_file(&resolve_path(base, path))?;
            Ok(InstanceData {
                instances: record.instances,
                mask: None,
            })
        };
        match (&self.mask, &self.annotation, annotation_only) {
            (_, Some(xml), true) | (None, Some(xml), false) => from_annotation(xml),
            (Some(mask_path), _, _) => {
                let mask = load_mask_png(&resolve_path(base, mask_path))?;
                if mask.width() != self.width || mask.height() != self.height {
                    return Err(AnnotationError::DimensionMismatch {
                        id: self.id.clone(),
                        mask_w: mask.width(),
                        mask_h: mask.height(),
                        want_w: self.width,
                        want_h: self.height,
                    });
                }
                let (instances, relabeled) = extract_clusters_with_mask(&mask);
                Ok(InstanceData {
                    instances,
                    mask: Some(relabeled),
                })
            }
            (None, None, _) => Err(AnnotationError::NoInstanceSource(self.id.clone())),
        }
    }
}
