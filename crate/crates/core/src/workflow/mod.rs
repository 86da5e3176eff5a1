//! Filesystem-level operations behind the command-line tool: dataset
//! patchification, fold splitting, evaluation of prediction files, and
//! synthetic dataset generation.

mod evaluate;
mod patchify;
mod synthgen;

pub use evaluate::{
    evaluate_files, evaluate_cross_val, load_ground_truth, CrossValRow, EvaluateArgs,
};
pub use patchify::{patchify, PatchManifest, PatchRecord, PatchifyArgs, PatchifySummary};
pub use synthgen::{synth_dataset, SynthArgs, SynthSummary};

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Annotation(#[from] crate::annotation::AnnotationError),
    #[error(transparent)]
    Patch(#[from] crate::patch::PatchError),
    #[error(transparent)]
    Split(#[from] crate::split::SplitError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error("output directory {0} already exists and is not empty")]
    OutDirNotEmpty(PathBuf),
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
    #[error("ground truth at {0} is neither a directory of XML files nor a patch manifest")]
    BadGroundTruth(PathBuf),
    #[error("patch {0:?} has no recoverable source image id; cross-validation needs a patch manifest")]
    NoSourceImage(String),
    #[error("image {0:?}: raster file {1} not found (needed for --crops)")]
    MissingImageFile(String, PathBuf),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkflowError + '_ {
    move |source| WorkflowError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates the output directory, insisting it is absent or empty.
pub(crate) fn prepare_out_dir(path: &Path) -> Result<(), WorkflowError> {
    if path.exists() {
        let mut entries = std::fs::read_dir(path).map_err(io_err(path))?;
        if entries.next().is_some() {
            return Err(WorkflowError::OutDirNotEmpty(path.to_path_buf()));
        }
        Ok(())
    } else {
        std::fs::create_dir_all(path).map_err(io_err(path))
    }
}

/// Runs `work`, removing the freshly prepared output directory when it
/// fails so no partial output is left behind.
pub(crate) fn with_clean_out_dir<T>(
    out_dir: &Path,
    work: impl FnOnce() -> Result<T, WorkflowError>,
) -> Result<T, WorkflowError> {
    prepare_out_dir(out_dir)?;
    match work() {
        Ok(value) => Ok(value),
        Err(err) => {
            let _ = std::fs::remove_dir_all(out_dir);
            Err(err)
        }
    }
}
