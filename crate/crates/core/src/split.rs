//! View-stratified, leak-free k-fold group assignment.
//!
//! Images are assigned to folds at the source-image level: each view's
//! image ids are shuffled with a seeded generator and dealt round-robin
//! into `k` subgroups, and fold `g` is the union of subgroup `g` across
//! views. Patches inherit their source image's fold, so no image's
//! patches ever cross a train/test boundary.

use crate::annotation::View;
use crate::patch::Patch;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(u32),
    #[error("view {view} holds only {count} images, cannot split into {k} folds")]
    ViewTooSmall { view: View, count: usize, k: u32 },
    #[error("duplicate image id {0:?}")]
    DuplicateImage(String),
    #[error("patch source image {0:?} missing from the fold assignment")]
    UnknownImage(String),
    #[error("test fold {fold} out of range for k={k}")]
    FoldOutOfRange { fold: u32, k: u32 },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Image-to-fold map, reproducible from its seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: u32,
    pub seed: u64,
    pub folds: BTreeMap<String, u32>,
}

impl FoldAssignment {
    pub fn fold_of(&self, image_id: &str) -> Option<u32> {
        self.folds.get(image_id).copied()
    }

    /// Serializes to the assignment-file JSON; byte-identical for
    /// identical assignments.
    pub fn to_json(&self) -> String {
        let mut body = serde_json::to_string_pretty(self).expect("assignment serializes");
        body.push('\n');
        body
    }

    pub fn save(&self, path: &Path) -> Result<(), SplitError> {
        std::fs::write(path, self.to_json()).map_err(|source| SplitError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SplitError> {
        let raw = std::fs::read_to_string(path).map_err(|source| SplitError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&raw).map_err(|source| SplitError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Assigns images to `k` folds, stratified by view.
///
/// Per view the ids are sorted, shuffled by a ChaCha generator seeded
/// from `(seed, view)`, and dealt round-robin, so per-view fold sizes
/// differ by at most one and the result is independent of input order.
pub fn assign_folds<'a, I>(images: I, k: u32, seed: u64) -> Result<FoldAssignment, SplitError>
where
    I: IntoIterator<Item = (&'a str, View)>,
{
    if k < 2 {
        return Err(SplitError::InvalidK(k));
    }
    let mut by_view: BTreeMap<View, Vec<&str>> = BTreeMap::new();
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    for (id, view) in images {
        if seen.insert(id, ()).is_some() {
            return Err(SplitError::DuplicateImage(id.to_string()));
        }
        by_view.entry(view).or_default().push(id);
    }

    let mut folds = BTreeMap::new();
    for (view, mut ids) in by_view {
        if ids.len() < k as usize {
            return Err(SplitError::ViewTooSmall {
                view,
                count: ids.len(),
                k,
            });
        }
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(view as u64 + 1);
        ids.shuffle(&mut rng);
        for (i, id) in ids.into_iter().enumerate() {
            folds.insert(id.to_string(), i as u32 % k);
        }
    }
    Ok(FoldAssignment { k, seed, folds })
}

/// Splits patches into `(train, test)` by their source image's fold.
pub fn materialize_split(
    assignment: &FoldAssignment,
    patches: Vec<Patch>,
    test_fold: u32,
) -> Result<(Vec<Patch>, Vec<Patch>), SplitError> {
    if test_fold >= assignment.k {
        return Err(SplitError::FoldOutOfRange {
            fold: test_fold,
            k: assignment.k,
        });
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for patch in patches {
        match assignment.fold_of(&patch.source_id) {
            Some(fold) if fold == test_fold => test.push(patch),
            Some(_) => train.push(patch),
            None => return Err(SplitError::UnknownImage(patch.source_id)),
        }
    }
    Ok((train, test))
}
