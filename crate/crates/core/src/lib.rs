//! Dataset engineering and detection evaluation for aphid-cluster
//! imagery.
//!
//! The crate covers the full workflow around a cluster-annotated field
//! dataset, without ever running a neural network:
//!
//! - [`geometry`]: exact box/mask geometry — IoU, gap distance,
//!   transitive box merging, NMS.
//! - [`annotation`]: instance-mask ingestion, PASCAL-VOC-style XML, the
//!   dataset manifest, and mask statistics.
//! - [`patch`]: overlapping 400×400 tiling with annotation clipping, box
//!   merging and tiny-fragment removal.
//! - [`split`]: view-stratified, leak-free k-fold assignment at the
//!   source-image level.
//! - [`eval`]: greedy IoU matching, PR curves, AP/recall sweeps, and
//!   box-coverage infestation scores for prediction files.
//! - [`synth`]: synthetic scenes plus a simulated detector, so the whole
//!   chain can be exercised and benchmarked at desk scale.
//! - [`workflow`]: the filesystem-level operations behind the `aphidcv`
//!   command-line tool.

pub mod annotation;
pub mod eval;
pub mod geometry;
pub mod patch;
pub mod split;
pub mod synth;
pub mod workflow;

pub use annotation::{AnnotatedImage, ClusterInstance, DatasetManifest, View};
pub use eval::{Detection, EvalReport};
pub use geometry::{BBox, InstanceMask};
pub use patch::{Patch, PipelineConfig};
pub use split::FoldAssignment;
