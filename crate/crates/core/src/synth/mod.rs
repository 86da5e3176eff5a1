//! Synthetic scenes and a simulated detector.
//!
//! Desk-scale stand-in for field data: scenes place multi-dot cluster
//! blobs (dense neighbors, border-straddling fragments) and the detector
//! model produces the failure modes the annotation pipeline is meant to
//! fix, so pipeline conditions can be compared end to end without a CNN.

mod detector;
mod scene;
mod trend;

pub use detector::{simulate_detector, DetectorNoise};
pub use scene::{gen_scene, gen_scene_with_id, SceneConfig};
pub use trend::{run_trend, ConditionMetrics, TrendOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("placed only {placed} of {requested} clusters; image too crowded")]
    PlacementFailed { placed: u32, requested: u32 },
    #[error(transparent)]
    Patch(#[from] crate::patch::PatchError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}
