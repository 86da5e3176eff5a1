//! Evaluation of prediction files against patch ground truth.

use super::patchify::PatchManifest;
use super::{io_err, WorkflowError};
use crate::annotation::read_voc_file;
use crate::eval::{
    evaluate_sweep, nms_per_patch, pr_curve_svg, read_predictions, report_to_csv, report_to_json,
    Detection, EvalOptions, EvalReport, GroundTruthSet, PatchGroundTruth,
};
use crate::patch::split_patch_id;
use crate::split::FoldAssignment;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Evaluation options shared by plain and cross-validated runs.
#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub iou_thresholds: Vec<f64>,
    /// Apply per-patch NMS at this IoU before scoring.
    pub nms: Option<f64>,
    pub coco_mean: bool,
    pub infestation_score_cutoff: f64,
    /// Write an SVG PR plot per threshold.
    pub plot: bool,
}

impl Default for EvaluateArgs {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.5],
            nms: None,
            coco_mean: false,
            infestation_score_cutoff: 0.3,
            plot: false,
        }
    }
}

/// Ground truth plus patch→source-image provenance (when known).
pub struct LoadedGroundTruth {
    pub set: GroundTruthSet,
    pub sources: BTreeMap<String, String>,
}

/// Loads ground truth from either a directory of per-patch VOC XML files
/// (patch id = file stem) or a `patches.json` patch manifest.
pub fn load_ground_truth(path: &Path) -> Result<LoadedGroundTruth, WorkflowError> {
    let mut set = GroundTruthSet::new();
    let mut sources = BTreeMap::new();

    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io_err(path))?
            .collect::<Result<Vec<_>, _>>()
            .map_err(io_err(path))?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "xml"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(WorkflowError::BadGroundTruth(path.to_path_buf()));
        }
        for file in files {
            let record = read_voc_file(&file)?;
            let id = record.id.clone();
            if let Some((source, _, _)) = split_patch_id(&id) {
                sources.insert(id.clone(), source.to_string());
            }
            set.insert(
                id,
                PatchGroundTruth {
                    width: record.width,
                    height: record.height,
                    instances: record.instances,
                },
            );
        }
    } else if path.is_file() {
        let manifest = PatchManifest::load(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for record in &manifest.patches {
            let annotated = read_voc_file(&base.join(&record.annotation))?;
            sources.insert(record.id.clone(), record.source.clone());
            set.insert(
                record.id.clone(),
                PatchGroundTruth {
                    width: annotated.width,
                    height: annotated.height,
                    instances: annotated.instances,
                },
            );
        }
    } else {
        return Err(WorkflowError::BadGroundTruth(path.to_path_buf()));
    }

    Ok(LoadedGroundTruth { set, sources })
}

fn check_ids(dets: &[Detection], gts: &GroundTruthSet) -> Result<(), WorkflowError> {
    let unknown: BTreeSet<&str> = dets
        .iter()
        .map(|d| d.id.as_str())
        .filter(|id| !gts.contains_key(*id))
        .collect();
    if !unknown.is_empty() {
        let mut sample: Vec<&str> = unknown.iter().copied().take(8).collect();
        if unknown.len() > sample.len() {
            sample.push("…");
        }
        return Err(WorkflowError::Eval(crate::eval::EvalError::UnknownIds {
            count: unknown.len(),
            sample: sample.join(", "),
        }));
    }
    for det in dets {
        let patch_gt = &gts[&det.id];
        if det.bbox.max_x() > patch_gt.width || det.bbox.max_y() > patch_gt.height {
            return Err(WorkflowError::Eval(
                crate::eval::EvalError::DetectionOutOfBounds {
                    id: det.id.clone(),
                    width: patch_gt.width,
                    height: patch_gt.height,
                },
            ));
        }
    }
    Ok(())
}

/// Scores a prediction file against ground truth and writes report files
/// into `out_dir` when given (`report.json`, `report.csv`, and PR plots
/// with `plot`).
pub fn evaluate_files(
    gt_path: &Path,
    predictions_path: &Path,
    args: &EvaluateArgs,
    out_dir: Option<&Path>,
) -> Result<EvalReport, WorkflowError> {
    let gt = load_ground_truth(gt_path)?;
    let mut dets = read_predictions(predictions_path)?;
    check_ids(&dets, &gt.set)?;
    if let Some(threshold) = args.nms {
        dets = nms_per_patch(dets, threshold);
    }

    let options = EvalOptions {
        coco_mean: args.coco_mean,
        infestation_score_cutoff: args.infestation_score_cutoff,
        nms_threshold: args.nms,
    };
    let report = evaluate_sweep(&dets, &gt.set, &args.iou_thresholds, &options)?;

    if let Some(out_dir) = out_dir {
        std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let json_path = out_dir.join("report.json");
        std::fs::write(&json_path, report_to_json(&report)).map_err(io_err(&json_path))?;
        let csv_path = out_dir.join("report.csv");
        std::fs::write(&csv_path, report_to_csv(&report)).map_err(io_err(&csv_path))?;
        if args.plot {
            for entry in &report.entries {
                let name = format!("pr_iou_{:.2}.svg", entry.iou).replace('.', "_");
                // keep one dot for the extension
                let name = name.replace("_svg", ".svg");
                let svg_path = out_dir.join(name);
                std::fs::write(&svg_path, pr_curve_svg(&entry.curve, entry.iou))
                    .map_err(io_err(&svg_path))?;
            }
        }
    }
    Ok(report)
}

/// Per-threshold mean ± std across cross-validation folds.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValRow {
    pub iou: f64,
    pub mean_ap: f64,
    pub std_ap: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
    /// Folds that actually held ground truth.
    pub folds: u32,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Evaluates each fold's test patches separately and aggregates the
/// per-fold AP and recall as mean ± std, one row per IoU threshold.
pub fn evaluate_cross_val(
    gt_path: &Path,
    predictions_path: &Path,
    assignment_path: &Path,
    args: &EvaluateArgs,
) -> Result<Vec<CrossValRow>, WorkflowError> {
    let gt = load_ground_truth(gt_path)?;
    let assignment = FoldAssignment::load(assignment_path)?;
    let mut dets = read_predictions(predictions_path)?;
    check_ids(&dets, &gt.set)?;
    if let Some(threshold) = args.nms {
        dets = nms_per_patch(dets, threshold);
    }

    // Group patches by the fold of their source image.
    let mut fold_of_patch: BTreeMap<&str, u32> = BTreeMap::new();
    for id in gt.set.keys() {
        let source = gt
            .sources
            .get(id)
            .cloned()
            .ok_or_else(|| WorkflowError::NoSourceImage(id.clone()))?;
        let fold = assignment
            .fold_of(&source)
            .ok_or(crate::split::SplitError::UnknownImage(source))
            .map_err(WorkflowError::Split)?;
        fold_of_patch.insert(id.as_str(), fold);
    }

    let options = EvalOptions {
        coco_mean: false,
        infestation_score_cutoff: args.infestation_score_cutoff,
        nms_threshold: args.nms,
    };
    let mut per_threshold: BTreeMap<u64, (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for fold in 0..assignment.k {
        let fold_gts: GroundTruthSet = gt
            .set
            .iter()
            .filter(|(id, _)| fold_of_patch.get(id.as_str()) == Some(&fold))
            .map(|(id, patch_gt)| (id.clone(), patch_gt.clone()))
            .collect();
        let instance_total: usize = fold_gts.values().map(|g| g.instances.len()).sum();
        if instance_total == 0 {
            continue;
        }
        let fold_dets: Vec<Detection> = dets
            .iter()
            .filter(|d| fold_gts.contains_key(&d.id))
            .cloned()
            .collect();
        let report = evaluate_sweep(&fold_dets, &fold_gts, &args.iou_thresholds, &options)?;
        for entry in &report.entries {
            let slot = per_threshold
                .entry(entry.iou.to_bits())
                .or_insert_with(|| (entry.iou, Vec::new(), Vec::new()));
            slot.1.push(entry.ap);
            slot.2.push(entry.recall);
        }
    }

    Ok(per_threshold
        .into_values()
        .map(|(iou, aps, recalls)| {
            let (mean_ap, std_ap) = mean_std(&aps);
            let (mean_recall, std_recall) = mean_std(&recalls);
            CrossValRow {
                iou,
                mean_ap,
                std_ap,
                mean_recall,
                std_recall,
                folds: aps.len() as u32,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{write_voc_file, AnnotatedImage, ClusterInstance, InstanceSource, View};
    use crate::eval::write_predictions;
    use crate::geometry::BBox;

    fn patch_xml(dir: &Path, id: &str, boxes: &[(u32, u32, u32, u32)]) {
        let image = AnnotatedImage {
            id: id.to_string(),
            width: 400,
            height: 400,
            view: View::View1,
            instances: boxes
                .iter()
                .enumerate()
                .map(|(i, b)| ClusterInstance {
                    id: i as u32 + 1,
                    bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
                    area: None,
                    source: InstanceSource::Labeled,
                })
                .collect(),
        };
        write_voc_file(&image, &dir.join(format!("{id}.xml"))).unwrap();
    }

    fn det(id: &str, b: (u32, u32, u32, u32), score: f64) -> Detection {
        Detection {
            id: id.into(),
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            score,
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let dir = tempfile::tempdir().unwrap();
        let gt_dir = dir.path().join("gt");
        std::fs::create_dir_all(&gt_dir).unwrap();
        patch_xml(&gt_dir, "img_x0_y0", &[(10, 10, 60, 60)]);
        patch_xml(&gt_dir, "img_x200_y0", &[(100, 100, 180, 200)]);
        let preds = dir.path().join("preds.jsonl");
        write_predictions(
            &preds,
            &[
                det("img_x0_y0", (10, 10, 60, 60), 0.9),
                det("img_x200_y0", (100, 100, 180, 200), 0.8),
            ],
        )
        .unwrap();

        let out = dir.path().join("report");
        let args = EvaluateArgs {
            iou_thresholds: vec![0.5, 0.75],
            plot: true,
            ..EvaluateArgs::default()
        };
        let report = evaluate_files(&gt_dir, &preds, &args, Some(&out)).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert!(report.entries.iter().all(|e| e.ap == 1.0 && e.recall == 1.0));
        assert!(out.join("report.json").exists());
        assert!(out.join("report.csv").exists());
        assert!(out.join("pr_iou_0_50.svg").exists());
        assert!(out.join("pr_iou_0_75.svg").exists());
    }

    #[test]
    fn unknown_prediction_ids_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let gt_dir = dir.path().join("gt");
        std::fs::create_dir_all(&gt_dir).unwrap();
        patch_xml(&gt_dir, "img_x0_y0", &[(10, 10, 60, 60)]);
        let preds = dir.path().join("preds.jsonl");
        write_predictions(&preds, &[det("mystery_x0_y0", (0, 0, 5, 5), 0.4)]).unwrap();
        let err =
            evaluate_files(&gt_dir, &preds, &EvaluateArgs::default(), None).unwrap_err();
        assert!(err.to_string().contains("mystery_x0_y0"));
    }

    #[test]
    fn cross_val_aggregates_over_folds() {
        let dir = tempfile::tempdir().unwrap();
        let gt_dir = dir.path().join("gt");
        std::fs::create_dir_all(&gt_dir).unwrap();
        // Two source images, one patch each.
        patch_xml(&gt_dir, "a_x0_y0", &[(10, 10, 60, 60)]);
        patch_xml(&gt_dir, "b_x0_y0", &[(10, 10, 60, 60)]);
        let preds = dir.path().join("preds.jsonl");
        write_predictions(
            &preds,
            &[
                det("a_x0_y0", (10, 10, 60, 60), 0.9), // hit
                det("b_x0_y0", (200, 200, 260, 260), 0.9), // miss
            ],
        )
        .unwrap();
        let assignment = crate::split::FoldAssignment {
            k: 2,
            seed: 0,
            folds: [("a".to_string(), 0), ("b".to_string(), 1)]
                .into_iter()
                .collect(),
        };
        let assignment_path = dir.path().join("folds.json");
        assignment.save(&assignment_path).unwrap();

        let rows = evaluate_cross_val(
            &gt_dir,
            &preds,
            &assignment_path,
            &EvaluateArgs::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.folds, 2);
        assert!((row.mean_ap - 0.5).abs() < 1e-12);
        assert!((row.std_ap - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(row.mean_recall, 0.5);
    }
}
