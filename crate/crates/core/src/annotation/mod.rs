//! Annotated-image domain types and dataset I/O.
//!
//! Covers cluster extraction from instance label maps, the PASCAL-VOC-style
//! XML annotation format, the dataset manifest, and mask statistics.

mod extract;
mod manifest;
mod stats;
mod voc;

pub use extract::{extract_clusters, extract_clusters_with_mask};
pub use manifest::{
    load_mask_png, resolve_path, save_mask_png, DatasetManifest, InstanceData, ManifestImage,
};
pub use stats::{dataset_stats, DatasetStats, HISTOGRAM_BIN_PX, HISTOGRAM_MAX_PX};
pub use voc::{read_voc_file, read_voc_xml, write_voc_file, write_voc_xml};

use crate::geometry::BBox;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

/// Errors from annotation parsing, manifests, and mask files.
#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("missing element <{0}>")]
    MissingElement(&'static str),
    #[error("element <{element}> holds invalid value {value:?}")]
    InvalidNumber { element: String, value: String },
    #[error("object {index}: {reason}")]
    InvalidObject { index: usize, reason: String },
    #[error("unknown view tag {0:?}")]
    UnknownView(String),
    #[error("duplicate image id {0:?} in manifest")]
    DuplicateImageId(String),
    #[error("mask {path}: {reason}")]
    Mask { path: PathBuf, reason: String },
    #[error("image {id:?}: mask is {mask_w}x{mask_h} but manifest declares {want_w}x{want_h}")]
    DimensionMismatch {
        id: String,
        mask_w: u32,
        mask_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("image {0:?} declares neither a mask nor an annotation file")]
    NoInstanceSource(String),
}

/// Camera height the photo was taken from; the stratification key for
/// cross-validation splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    View1,
    View2,
    View3,
}

impl View {
    pub const ALL: [View; 3] = [View::View1, View::View2, View::View3];

    pub fn as_str(&self) -> &'static str {
        match self {
            View::View1 => "view1",
            View::View2 => "view2",
            View::View3 => "view3",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "view1" => Ok(View::View1),
            "view2" => Ok(View::View2),
            "view3" => Ok(View::View3),
            other => Err(AnnotationError::UnknownView(other.to_string())),
        }
    }
}

/// How an instance came to be: drawn by an annotator, produced by box
/// merging, or clipped at a patch window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    Labeled,
    Merged,
    Clipped,
}

impl InstanceSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceSource::Labeled => "labeled",
            InstanceSource::Merged => "merged",
            InstanceSource::Clipped => "clipped",
        }
    }
}

impl FromStr for InstanceSource {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "labeled" => Ok(InstanceSource::Labeled),
            "merged" => Ok(InstanceSource::Merged),
            "clipped" => Ok(InstanceSource::Clipped),
            _ => Err(()),
        }
    }
}

/// One annotated aphid cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterInstance {
    pub id: u32,
    pub bbox: BBox,
    /// Mask pixel count when known; `None` for box-only annotations.
    pub area: Option<u64>,
    pub source: InstanceSource,
}

impl ClusterInstance {
    /// Mask area when known, box area otherwise. The tiny-cluster filter
    /// and the detector simulation both size instances this way.
    pub fn effective_area(&self) -> u64 {
        self.area.unwrap_or_else(|| self.bbox.area())
    }
}

/// Source image metadata plus its cluster instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedImage {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub view: View,
    pub instances: Vec<ClusterInstance>,
}

impl AnnotatedImage {
    /// Index of the first instance box leaving the image bounds, if any.
    pub fn first_out_of_bounds(&self) -> Option<usize> {
        self.instances
            .iter()
            .position(|inst| inst.bbox.max_x() > self.width || inst.bbox.max_y() > self.height)
    }
}
