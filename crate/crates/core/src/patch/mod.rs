//! Patch tiling and the annotation post-processing pipeline.
//!
//! Full images are tiled into fixed-size windows with 50% overlap by
//! default; annotations are clipped into each window, nearby boxes are
//! merged, tiny fragments removed, and empty patches discarded.

mod grid;
mod pipeline;

pub use grid::{plan_grid, PatchGrid};
pub use pipeline::{
    crop_annotations, discard_empty, filter_tiny, merge_patch_instances, pipeline,
    pipeline_with_counts, split_patch_id, Patch, PipelineConfig, StageCounts,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatchError {
    #[error("patch size {patch} exceeds image dimensions {width}x{height}")]
    PatchLargerThanImage { patch: u32, width: u32, height: u32 },
    #[error("stride {stride} invalid: must satisfy 1 <= stride <= patch ({patch})")]
    InvalidStride { stride: u32, patch: u32 },
}
