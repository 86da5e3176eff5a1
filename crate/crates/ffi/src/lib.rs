//! C ABI for the aphidcv toolkit.
//!
//! Exposes the box geometry operations (IoU, gap distance, merging, NMS)
//! over flat coordinate arrays, plus file-based evaluation behind an
//! opaque report handle, so other languages can bind without linking
//! Rust types. Boxes travel as `[min_x, min_y, max_x, max_y]` quadruples
//! of `int32_t`, 0-based half-open. Every function returns an
//! [`AcvStatus`]; on failure `acv_last_error` holds a message for the
//! calling thread.

use aphidcv::eval::EvalReport;
use aphidcv::geometry::{bbox_gap, bbox_iou, merge_close_boxes, nms, BBox};
use aphidcv::workflow::{evaluate_files, EvaluateArgs};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

/// Result code of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Box coordinates were negative, inverted or empty.
    InvalidBox = 2,
    /// An argument was out of range (thresholds, capacities, indices).
    InvalidArgument = 3,
    /// Input files were malformed.
    ParseError = 4,
    /// A file could not be read or written.
    IoError = 5,
    /// Evaluation was impossible (for example no ground truth).
    EvalError = 6,
    /// A path or string argument was not valid UTF-8.
    Utf8Error = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: AcvStatus, message: impl Into<Vec<u8>>) -> AcvStatus {
    let message = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
    status
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::default());
}

/// Message describing the calling thread's most recent failure. The
/// pointer stays valid until the next FFI call on the same thread.
#[no_mangle]
pub extern "C" fn acv_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn box_from_coords(coords: &[i32]) -> Result<BBox, AcvStatus> {
    let as_u32 = |v: i32| u32::try_from(v).map_err(|_| AcvStatus::InvalidBox);
    BBox::new(
        as_u32(coords[0])?,
        as_u32(coords[1])?,
        as_u32(coords[2])?,
        as_u32(coords[3])?,
    )
    .map_err(|_| AcvStatus::InvalidBox)
}

unsafe fn boxes_from_raw(boxes: *const i32, n_boxes: usize) -> Result<Vec<BBox>, AcvStatus> {
    if n_boxes > 0 && boxes.is_null() {
        return Err(AcvStatus::NullPointer);
    }
    let flat = std::slice::from_raw_parts(boxes, n_boxes * 4);
    flat.chunks_exact(4).map(box_from_coords).collect()
}

/// Intersection-over-union of two boxes.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn acv_bbox_iou(
    a_min_x: i32,
    a_min_y: i32,
    a_max_x: i32,
    a_max_y: i32,
    b_min_x: i32,
    b_min_y: i32,
    b_max_x: i32,
    b_max_y: i32,
    out: *mut f64,
) -> AcvStatus {
    clear_error();
    if out.is_null() {
        return fail(AcvStatus::NullPointer, "out pointer is null");
    }
    let a = match box_from_coords(&[a_min_x, a_min_y, a_max_x, a_max_y]) {
        Ok(b) => b,
        Err(status) => return fail(status, "box a is invalid"),
    };
    let b = match box_from_coords(&[b_min_x, b_min_y, b_max_x, b_max_y]) {
        Ok(b) => b,
        Err(status) => return fail(status, "box b is invalid"),
    };
    *out = bbox_iou(&a, &b);
    AcvStatus::Ok
}

/// Closest Euclidean distance between two boxes (0 when they touch).
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn acv_bbox_gap(
    a_min_x: i32,
    a_min_y: i32,
    a_max_x: i32,
    a_max_y: i32,
    b_min_x: i32,
    b_min_y: i32,
    b_max_x: i32,
    b_max_y: i32,
    out: *mut f64,
) -> AcvStatus {
    clear_error();
    if out.is_null() {
        return fail(AcvStatus::NullPointer, "out pointer is null");
    }
    let a = match box_from_coords(&[a_min_x, a_min_y, a_max_x, a_max_y]) {
        Ok(b) => b,
        Err(status) => return fail(status, "box a is invalid"),
    };
    let b = match box_from_coords(&[b_min_x, b_min_y, b_max_x, b_max_y]) {
        Ok(b) => b,
        Err(status) => return fail(status, "box b is invalid"),
    };
    *out = bbox_gap(&a, &b).value();
    AcvStatus::Ok
}

/// Transitively merges boxes whose gap is at most `threshold_px` and
/// writes the merged boxes (sorted by `min_y`, `min_x`) to `out_boxes`.
/// The output never holds more boxes than the input, so a capacity of
/// `n_boxes` always suffices.
///
/// # Safety
/// `boxes` must hold `4 * n_boxes` readable values, `out_boxes`
/// `4 * capacity` writable ones, and `out_len` one writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn acv_merge_close_boxes(
    boxes: *const i32,
    n_boxes: usize,
    threshold_px: f64,
    out_boxes: *mut i32,
    capacity: usize,
    out_len: *mut usize,
) -> AcvStatus {
    clear_error();
    if out_len.is_null() || (capacity > 0 && out_boxes.is_null()) {
        return fail(AcvStatus::NullPointer, "output pointer is null");
    }
    if threshold_px.is_nan() || threshold_px < 0.0 {
        return fail(AcvStatus::InvalidArgument, "threshold must be non-negative");
    }
    let parsed = match boxes_from_raw(boxes, n_boxes) {
        Ok(v) => v,
        Err(status) => return fail(status, "input boxes are invalid"),
    };
    let merged = merge_close_boxes(&parsed, threshold_px);
    *out_len = merged.len();
    if merged.len() > capacity {
        return fail(
            AcvStatus::InvalidArgument,
            format!("capacity {capacity} too small for {} merged boxes", merged.len()),
        );
    }
    let out = std::slice::from_raw_parts_mut(out_boxes, merged.len() * 4);
    for (slot, b) in out.chunks_exact_mut(4).zip(&merged) {
        slot[0] = b.min_x() as i32;
        slot[1] = b.min_y() as i32;
        slot[2] = b.max_x() as i32;
        slot[3] = b.max_y() as i32;
    }
    AcvStatus::Ok
}

/// Greedy non-maximum suppression. Writes the indices of kept boxes, in
/// keep order, to `keep`. A capacity of `n_boxes` always suffices.
///
/// # Safety
/// `boxes` must hold `4 * n_boxes` readable values, `scores` `n_boxes`,
/// `keep` `capacity` writable ones, and `out_len` one writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn acv_nms(
    boxes: *const i32,
    scores: *const f64,
    n_boxes: usize,
    iou_threshold: f64,
    keep: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> AcvStatus {
    clear_error();
    if out_len.is_null() || (n_boxes > 0 && scores.is_null()) || (capacity > 0 && keep.is_null()) {
        return fail(AcvStatus::NullPointer, "pointer argument is null");
    }
    if !(0.0..=1.0).contains(&iou_threshold) {
        return fail(AcvStatus::InvalidArgument, "iou threshold outside [0, 1]");
    }
    let parsed = match boxes_from_raw(boxes, n_boxes) {
        Ok(v) => v,
        Err(status) => return fail(status, "input boxes are invalid"),
    };
    let score_slice = std::slice::from_raw_parts(scores, n_boxes);
    if let Some(bad) = score_slice.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return fail(AcvStatus::InvalidArgument, format!("score {bad} outside [0, 1]"));
    }

    // Detections carry their input index as the id so kept entries can be
    // reported back as indices.
    let dets: Vec<aphidcv::eval::Detection> = parsed
        .iter()
        .zip(score_slice)
        .enumerate()
        .map(|(i, (b, &s))| aphidcv::eval::Detection {
            id: i.to_string(),
            bbox: *b,
            score: s,
        })
        .collect();
    let kept = nms(&dets, iou_threshold);
    *out_len = kept.len();
    if kept.len() > capacity {
        return fail(
            AcvStatus::InvalidArgument,
            format!("capacity {capacity} too small for {} kept boxes", kept.len()),
        );
    }
    let out = std::slice::from_raw_parts_mut(keep, kept.len());
    for (slot, det) in out.iter_mut().zip(&kept) {
        *slot = det.id.parse().expect("id is the input index");
    }
    AcvStatus::Ok
}

/// Opaque evaluation report handle.
pub struct AcvReport {
    inner: EvalReport,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, AcvStatus> {
    if ptr.is_null() {
        return Err(AcvStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| AcvStatus::Utf8Error)
}

fn status_for(err: &aphidcv::workflow::WorkflowError) -> AcvStatus {
    use aphidcv::workflow::WorkflowError as W;
    match err {
        W::Io { .. } | W::MissingImageFile(..) | W::OutDirNotEmpty(_) => AcvStatus::IoError,
        W::Eval(aphidcv::eval::EvalError::Io { .. }) => AcvStatus::IoError,
        W::Annotation(aphidcv::annotation::AnnotationError::Io { .. }) => AcvStatus::IoError,
        W::Eval(aphidcv::eval::EvalError::NoGroundTruth) => AcvStatus::EvalError,
        W::Eval(aphidcv::eval::EvalError::UnknownIds { .. }) => AcvStatus::EvalError,
        W::Json { .. } | W::Annotation(_) | W::BadGroundTruth(_) => AcvStatus::ParseError,
        W::Eval(_) => AcvStatus::ParseError,
        _ => AcvStatus::InvalidArgument,
    }
}

/// Evaluates a JSONL prediction file against ground truth (a directory
/// of patch XML files or a patches.json manifest) at the given IoU
/// thresholds. Pass a negative `nms_threshold` to skip NMS. On success
/// `*out` owns a report; release it with `acv_report_free`.
///
/// # Safety
/// `gt_path` and `predictions_path` must be NUL-terminated strings,
/// `ious` must hold `n_ious` readable values, and `out` one writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn acv_evaluate(
    gt_path: *const c_char,
    predictions_path: *const c_char,
    ious: *const f64,
    n_ious: usize,
    nms_threshold: f64,
    out: *mut *mut AcvReport,
) -> AcvStatus {
    clear_error();
    if out.is_null() || (n_ious > 0 && ious.is_null()) {
        return fail(AcvStatus::NullPointer, "pointer argument is null");
    }
    let gt = match cstr_arg(gt_path) {
        Ok(s) => s,
        Err(status) => return fail(status, "gt_path is invalid"),
    };
    let preds = match cstr_arg(predictions_path) {
        Ok(s) => s,
        Err(status) => return fail(status, "predictions_path is invalid"),
    };
    let args = EvaluateArgs {
        iou_thresholds: std::slice::from_raw_parts(ious, n_ious).to_vec(),
        nms: (nms_threshold >= 0.0).then_some(nms_threshold),
        ..EvaluateArgs::default()
    };
    match evaluate_files(Path::new(gt), Path::new(preds), &args, None) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(AcvReport { inner: report }));
            AcvStatus::Ok
        }
        Err(err) => fail(status_for(&err), err.to_string()),
    }
}

/// Number of IoU-threshold rows in the report.
///
/// # Safety
/// `report` must be a live pointer from `acv_evaluate` (or null).
#[no_mangle]
pub unsafe extern "C" fn acv_report_rows(report: *const AcvReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.entries.len()
}

/// Copies one report row. Null metric pointers are skipped.
///
/// # Safety
/// `report` must be a live pointer from `acv_evaluate`; non-null metric
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn acv_report_row(
    report: *const AcvReport,
    index: usize,
    iou: *mut f64,
    ap: *mut f64,
    recall: *mut f64,
    tp: *mut u64,
    fp: *mut u64,
    missed: *mut u64,
) -> AcvStatus {
    clear_error();
    if report.is_null() {
        return fail(AcvStatus::NullPointer, "report is null");
    }
    let entries = &(*report).inner.entries;
    let Some(entry) = entries.get(index) else {
        return fail(
            AcvStatus::InvalidArgument,
            format!("row {index} out of range ({} rows)", entries.len()),
        );
    };
    if !iou.is_null() {
        *iou = entry.iou;
    }
    if !ap.is_null() {
        *ap = entry.ap;
    }
    if !recall.is_null() {
        *recall = entry.recall;
    }
    if !tp.is_null() {
        *tp = entry.tp;
    }
    if !fp.is_null() {
        *fp = entry.fp;
    }
    if !missed.is_null() {
        *missed = entry.missed;
    }
    AcvStatus::Ok
}

/// Releases a report returned by `acv_evaluate`. Null is a no-op.
///
/// # Safety
/// `report` must be a pointer from `acv_evaluate` that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn acv_report_free(report: *mut AcvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Version of the underlying toolkit as a static string.
#[no_mangle]
pub extern "C" fn acv_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
