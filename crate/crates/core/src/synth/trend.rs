//! End-to-end condition comparison on synthetic data.
//!
//! Runs the annotation pipeline in its three conditions — original,
//! merge-only, merge plus tiny removal — over one synthetic scene,
//! simulates a detector against each condition's ground truth, and
//! scores it. Used to check that each cleanup step actually raises AP
//! and recall on data that exhibits the failure modes it targets.

use super::{gen_scene, simulate_detector, DetectorNoise, SceneConfig, SynthError};
use crate::eval::{average_precision, ground_truth_from_patches, recall_overall, Detection};
use crate::patch::{pipeline, Patch, PipelineConfig};

/// AP and recall of one pipeline condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionMetrics {
    pub ap: f64,
    pub recall: f64,
}

/// Metrics for the three annotation conditions of one synthetic run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendOutcome {
    pub original: ConditionMetrics,
    pub merge10: ConditionMetrics,
    pub rm001: ConditionMetrics,
}

impl TrendOutcome {
    pub fn conditions(&self) -> [ConditionMetrics; 3] {
        [self.original, self.merge10, self.rm001]
    }
}

fn score_condition(
    patches: &[Patch],
    noise: &DetectorNoise,
    iou: f64,
) -> Result<(ConditionMetrics, Vec<Detection>), SynthError> {
    let gts = ground_truth_from_patches(patches);
    let dets = simulate_detector(patches, noise);
    let (ap, _) = average_precision(&dets, &gts, iou)?;
    let recall = recall_overall(&dets, &gts, iou)?;
    Ok((ConditionMetrics { ap, recall }, dets))
}

/// Generates one scene and scores the simulated detector against all
/// three pipeline conditions at the given matching IoU.
pub fn run_trend(
    scene: &SceneConfig,
    noise: &DetectorNoise,
    base: &PipelineConfig,
    iou: f64,
) -> Result<TrendOutcome, SynthError> {
    let (image, mask) = gen_scene(scene)?;

    let original = pipeline(&image, &base.clone().original(), Some(&mask))?;
    let merged = pipeline(&image, &base.clone().merge_only(), Some(&mask))?;
    let removed = {
        let mut config = base.clone();
        config.merge = true;
        config.remove_tiny = true;
        pipeline(&image, &config, Some(&mask))?
    };

    Ok(TrendOutcome {
        original: score_condition(&original, noise, iou)?.0,
        merge10: score_condition(&merged, noise, iou)?.0,
        rm001: score_condition(&removed, noise, iou)?.0,
    })
}
