//! Detection scoring: IoU matching, PR curves, AP, recall, and
//! infestation coverage.

mod ap;
mod coverage;
mod matching;
mod predfile;
mod report;

pub use ap::{average_precision, evaluate_sweep, recall_overall, EvalOptions};
pub use coverage::infestation_score;
pub use matching::{match_detections, MatchOutcome};
pub use predfile::{
    predictions_from_str, predictions_to_string, read_predictions, write_predictions,
};
pub use report::{pr_curve_svg, report_to_csv, report_to_json};

use crate::geometry::BBox;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// The COCO threshold ladder 0.50, 0.55, …, 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detections span multiple patch ids ({first:?} and {second:?})")]
    MixedPatchIds { first: String, second: String },
    #[error("no ground-truth instances: AP and recall are undefined")]
    NoGroundTruth,
    #[error("threshold list is empty")]
    NoThresholds,
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("prediction line {line}: {reason}")]
    PredictionLine { line: usize, reason: String },
    #[error("{count} prediction ids have no ground-truth patch: {sample}")]
    UnknownIds { count: usize, sample: String },
    #[error("detection on patch {id:?} leaves the {width}x{height} patch bounds")]
    DetectionOutOfBounds { id: String, width: u32, height: u32 },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One predicted box with its confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Patch (or image) id the prediction belongs to.
    pub id: String,
    pub bbox: BBox,
    /// Confidence in `[0, 1]`.
    pub score: f64,
}

/// One precision/recall sample, taken at the score threshold that adds
/// the last detection included in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub score: f64,
    pub recall: f64,
    pub precision: f64,
}

/// PR samples ordered by descending score threshold, hence non-decreasing
/// recall.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// Ground truth for one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGroundTruth {
    pub width: u32,
    pub height: u32,
    pub instances: Vec<crate::annotation::ClusterInstance>,
}

/// Ground truth across patches, keyed by patch id.
pub type GroundTruthSet = BTreeMap<String, PatchGroundTruth>;

/// Applies greedy NMS within each patch id. Output is ordered by patch
/// id, then keep order, so identical inputs serialize identically.
pub fn nms_per_patch(dets: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    let mut by_patch: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for det in dets {
        by_patch.entry(det.id.clone()).or_default().push(det);
    }
    by_patch
        .into_values()
        .flat_map(|group| crate::geometry::nms(&group, iou_threshold))
        .collect()
}

/// Indexes pipeline output patches as an evaluation ground-truth set.
pub fn ground_truth_from_patches(patches: &[crate::patch::Patch]) -> GroundTruthSet {
    patches
        .iter()
        .map(|patch| {
            (
                patch.patch_id(),
                PatchGroundTruth {
                    width: patch.size,
                    height: patch.size,
                    instances: patch.instances.clone(),
                },
            )
        })
        .collect()
}

/// Per-IoU-threshold metrics. Counts are taken with every detection kept
/// (no score cutoff), so `tp + fn` equals the ground-truth total.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdMetrics {
    pub iou: f64,
    pub ap: f64,
    pub recall: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub missed: u64,
    pub curve: PrCurve,
}

/// Echo of the evaluation configuration, embedded in reports.
#[derive(Debug, Clone, Serialize)]
pub struct EvalConfigEcho {
    pub iou_thresholds: Vec<f64>,
    pub nms_threshold: Option<f64>,
    pub infestation_score_cutoff: f64,
}

/// Full evaluation output.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub config: EvalConfigEcho,
    pub entries: Vec<ThresholdMetrics>,
    /// Mean AP over the COCO ladder, when requested.
    pub coco_mean_ap: Option<f64>,
    /// Fraction of each patch covered by predicted boxes at the score
    /// cutoff; a proxy for infestation severity.
    pub infestation: BTreeMap<String, f64>,
}
