//! Simulated detector.
//!
//! Emits the failure modes real detectors show on this data: clusters
//! sitting within merge distance of each other are often predicted as one
//! box, tiny border fragments are mostly missed or covered only
//! partially, and a background rate of spurious boxes is added. Working
//! from each patch's ground truth, the same noise model then responds to
//! whatever annotation condition produced that ground truth.

use crate::eval::Detection;
use crate::geometry::{merge_groups, BBox};
use crate::patch::Patch;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// Detector noise model. Deterministic given `seed` and the patch list.
#[derive(Debug, Clone)]
pub struct DetectorNoise {
    /// Stddev of the Gaussian jitter added to each box corner coordinate.
    pub jitter_std: f64,
    /// Miss probability for ordinary instances.
    pub miss_prob: f64,
    /// Miss probability for tiny instances (area below `tiny_area_px`).
    pub tiny_miss_prob: f64,
    /// Instances below this many pixels count as tiny; matches 1% of a
    /// 400x400 patch.
    pub tiny_area_px: u64,
    /// Probability that a surviving tiny border fragment is covered by a
    /// partial box instead of an aligned one.
    pub partial_prob: f64,
    /// Probability that a group of instances within `group_gap_px` is
    /// predicted as one enclosing box.
    pub group_merge_prob: f64,
    /// Gap under which instances confuse the detector into one box.
    pub group_gap_px: f64,
    /// Mean spurious boxes per patch (Poisson).
    pub spurious_rate: f64,
    /// Uniform score range of correct predictions.
    pub true_score: (f64, f64),
    /// Uniform score range of spurious and partial predictions.
    pub spurious_score: (f64, f64),
    pub seed: u64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self {
            jitter_std: 2.0,
            miss_prob: 0.02,
            tiny_miss_prob: 0.65,
            tiny_area_px: 1_600,
            partial_prob: 0.6,
            group_merge_prob: 0.85,
            group_gap_px: 10.0,
            spurious_rate: 0.25,
            true_score: (0.55, 0.98),
            spurious_score: (0.05, 0.45),
            seed: 0,
        }
    }
}

impl DetectorNoise {
    /// Noise-free detector: predictions equal the ground truth.
    pub fn none(seed: u64) -> Self {
        Self {
            jitter_std: 0.0,
            miss_prob: 0.0,
            tiny_miss_prob: 0.0,
            partial_prob: 0.0,
            group_merge_prob: 0.0,
            spurious_rate: 0.0,
            seed,
            ..Self::default()
        }
    }
}

fn jitter_box(bbox: &BBox, size: u32, std: f64, rng: &mut ChaCha8Rng) -> BBox {
    if std == 0.0 {
        return *bbox;
    }
    let noise = Normal::new(0.0, std).expect("stddev is finite and non-negative");
    let mut wiggle = |v: u32| -> i64 {
        let moved = v as f64 + noise.sample(rng);
        (moved.round() as i64).clamp(0, i64::from(size))
    };
    let mut min_x = wiggle(bbox.min_x());
    let mut min_y = wiggle(bbox.min_y());
    let mut max_x = wiggle(bbox.max_x());
    let mut max_y = wiggle(bbox.max_y());
    if min_x >= max_x {
        min_x = i64::from(bbox.min_x()).min(i64::from(size) - 1);
        max_x = min_x + 1;
    }
    if min_y >= max_y {
        min_y = i64::from(bbox.min_y()).min(i64::from(size) - 1);
        max_y = min_y + 1;
    }
    BBox::new(min_x as u32, min_y as u32, max_x as u32, max_y as u32)
        .expect("clamped jitter keeps min below max")
}

fn partial_box(bbox: &BBox, rng: &mut ChaCha8Rng) -> BBox {
    let shrink = |min: u32, max: u32, rng: &mut ChaCha8Rng| -> (u32, u32) {
        let len = max - min;
        let keep = ((len as f64 * rng.random_range(0.35..0.65)).round() as u32)
            .clamp(1, len);
        let start = min + rng.random_range(0..=len - keep);
        (start, start + keep)
    };
    let (min_x, max_x) = shrink(bbox.min_x(), bbox.max_x(), rng);
    let (min_y, max_y) = shrink(bbox.min_y(), bbox.max_y(), rng);
    BBox::new(min_x, min_y, max_x, max_y).expect("shrunk box keeps at least one pixel")
}

fn touches_border(bbox: &BBox, size: u32) -> bool {
    bbox.min_x() == 0 || bbox.min_y() == 0 || bbox.max_x() == size || bbox.max_y() == size
}

fn score_in(range: (f64, f64), rng: &mut ChaCha8Rng) -> f64 {
    if range.0 >= range.1 {
        range.0.clamp(0.0, 1.0)
    } else {
        rng.random_range(range.0..range.1).clamp(0.0, 1.0)
    }
}

/// Simulates detector output over ground-truth patches.
pub fn simulate_detector(patches: &[Patch], noise: &DetectorNoise) -> Vec<Detection> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut dets = Vec::new();

    for patch in patches {
        let patch_id = patch.patch_id();
        let emit = |bbox: BBox, score: f64, dets: &mut Vec<Detection>| {
            dets.push(Detection {
                id: patch_id.clone(),
                bbox,
                score,
            });
        };

        let boxes: Vec<BBox> = patch.instances.iter().map(|i| i.bbox).collect();
        for (hull, members) in merge_groups(&boxes, noise.group_gap_px) {
            if members.len() >= 2 && rng.random_bool(noise.group_merge_prob) {
                // Confused by the dense group: one box spanning it all.
                let bbox = jitter_box(&hull, patch.size, noise.jitter_std, &mut rng);
                emit(bbox, score_in(noise.true_score, &mut rng), &mut dets);
                continue;
            }
            for member in members {
                let inst = &patch.instances[member];
                let tiny = inst.effective_area() < noise.tiny_area_px;
                let miss = if tiny { noise.tiny_miss_prob } else { noise.miss_prob };
                if rng.random_bool(miss.clamp(0.0, 1.0)) {
                    continue;
                }
                if tiny
                    && touches_border(&inst.bbox, patch.size)
                    && rng.random_bool(noise.partial_prob.clamp(0.0, 1.0))
                {
                    let bbox = partial_box(&inst.bbox, &mut rng);
                    emit(bbox, score_in(noise.spurious_score, &mut rng), &mut dets);
                } else {
                    let bbox = jitter_box(&inst.bbox, patch.size, noise.jitter_std, &mut rng);
                    emit(bbox, score_in(noise.true_score, &mut rng), &mut dets);
                }
            }
        }

        if noise.spurious_rate > 0.0 {
            let poisson = Poisson::new(noise.spurious_rate).expect("rate is positive");
            let spurious = poisson.sample(&mut rng) as u64;
            for _ in 0..spurious {
                let w = rng.random_range(15..70).min(patch.size - 1);
                let h = rng.random_range(15..70).min(patch.size - 1);
                let x = rng.random_range(0..patch.size - w);
                let y = rng.random_range(0..patch.size - h);
                let bbox = BBox::new(x, y, x + w, y + h).expect("spurious box is non-empty");
                emit(bbox, score_in(noise.spurious_score, &mut rng), &mut dets);
            }
        }
    }
    dets
}
