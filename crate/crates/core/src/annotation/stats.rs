//! Dataset-level annotation statistics.

use super::{AnnotationError, DatasetManifest, View};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Histogram bin width in pixels.
pub const HISTOGRAM_BIN_PX: u32 = 100;
/// Areas at or above this many pixels are counted separately instead of
/// binned; large masks are rare and sparsely distributed.
pub const HISTOGRAM_MAX_PX: u32 = 5_000;

/// Summary statistics over a dataset's cluster masks.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetStats {
    pub images: u64,
    pub clusters: u64,
    pub view_counts: BTreeMap<View, u64>,
    pub view_percentages: BTreeMap<View, f64>,
    pub median_area: Option<f64>,
    pub mean_area: Option<f64>,
    pub histogram_bin_px: u32,
    pub histogram_max_px: u32,
    /// Cluster counts per `HISTOGRAM_BIN_PX`-wide area bin below
    /// `HISTOGRAM_MAX_PX`.
    pub histogram: Vec<u64>,
    /// Clusters with area `>= HISTOGRAM_MAX_PX`.
    pub oversize: u64,
}

/// Computes cluster count, per-view image percentages, the mask-area
/// histogram, and median/mean mask area for a manifest.
///
/// Areas come from mask pixels when masks are available, otherwise from
/// the annotation file (mask area if recorded there, box area as a last
/// resort).
pub fn dataset_stats(
    manifest: &DatasetManifest,
    base: &Path,
) -> Result<DatasetStats, AnnotationError> {
    let mut areas: Vec<u64> = Vec::new();
    let mut view_counts: BTreeMap<View, u64> = BTreeMap::new();

    for record in &manifest.images {
        *view_counts.entry(record.view).or_insert(0) += 1;
        let data = record.load_instances(base, false)?;
        for inst in &data.instances {
            areas.push(inst.effective_area());
        }
    }

    let images = manifest.images.len() as u64;
    let view_percentages = view_counts
        .iter()
        .map(|(view, count)| (*view, 100.0 * *count as f64 / images as f64))
        .collect();

    let bins = (HISTOGRAM_MAX_PX / HISTOGRAM_BIN_PX) as usize;
    let mut histogram = vec![0u64; bins];
    let mut oversize = 0u64;
    for &area in &areas {
        if area >= u64::from(HISTOGRAM_MAX_PX) {
            oversize += 1;
        } else {
            histogram[(area / u64::from(HISTOGRAM_BIN_PX)) as usize] += 1;
        }
    }

    areas.sort_unstable();
    let median_area = match areas.len() {
        0 => None,
        n if n % 2 == 1 => Some(areas[n / 2] as f64),
        n => Some((areas[n / 2 - 1] as f64 + areas[n / 2] as f64) / 2.0),
    };
    let mean_area = if areas.is_empty() {
        None
    } else {
        Some(areas.iter().sum::<u64>() as f64 / areas.len() as f64)
    };

    Ok(DatasetStats {
        images,
        clusters: areas.len() as u64,
        view_counts,
        view_percentages,
        median_area,
        mean_area,
        histogram_bin_px: HISTOGRAM_BIN_PX,
        histogram_max_px: HISTOGRAM_MAX_PX,
        histogram,
        oversize,
    })
}
