//! Prediction files: JSON lines, one detection per line.
//!
//! `{"id":"<patch>","bbox":[x1,y1,x2,y2],"score":0.87}` with 0-based
//! half-open box coordinates.

use super::{Detection, EvalError};
use crate::geometry::BBox;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct PredLine {
    id: String,
    bbox: [i64; 4],
    score: f64,
}

fn line_error(line: usize, reason: impl Into<String>) -> EvalError {
    EvalError::PredictionLine {
        line,
        reason: reason.into(),
    }
}

fn parse_line(line_no: usize, raw: &str) -> Result<Detection, EvalError> {
    let parsed: PredLine =
        serde_json::from_str(raw).map_err(|e| line_error(line_no, e.to_string()))?;
    if !(0.0..=1.0).contains(&parsed.score) {
        return Err(line_error(
            line_no,
            format!("score {} outside [0, 1]", parsed.score),
        ));
    }
    let [x1, y1, x2, y2] = parsed.bbox;
    let coord = |v: i64| -> Result<u32, EvalError> {
        u32::try_from(v).map_err(|_| line_error(line_no, format!("coordinate {v} out of range")))
    };
    let bbox = BBox::new(coord(x1)?, coord(y1)?, coord(x2)?, coord(y2)?)
        .map_err(|e| line_error(line_no, e.to_string()))?;
    Ok(Detection {
        id: parsed.id,
        bbox,
        score: parsed.score,
    })
}

/// Parses JSONL predictions; blank lines are skipped, errors carry the
/// 1-based line number.
pub fn predictions_from_str(raw: &str) -> Result<Vec<Detection>, EvalError> {
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| parse_line(i + 1, line))
        .collect()
}

/// Serializes detections to the JSONL format.
pub fn predictions_to_string(dets: &[Detection]) -> String {
    let mut out = String::new();
    for det in dets {
        let line = PredLine {
            id: det.id.clone(),
            bbox: [
                i64::from(det.bbox.min_x()),
                i64::from(det.bbox.min_y()),
                i64::from(det.bbox.max_x()),
                i64::from(det.bbox.max_y()),
            ],
            score: det.score,
        };
        out.push_str(&serde_json::to_string(&line).expect("prediction line serializes"));
        out.push('\n');
    }
    out
}

pub fn read_predictions(path: &Path) -> Result<Vec<Detection>, EvalError> {
    let raw = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    predictions_from_str(&raw)
}

pub fn write_predictions(path: &Path, dets: &[Detection]) -> Result<(), EvalError> {
    std::fs::write(path, predictions_to_string(dets)).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}
