//! Exercises the C ABI the way a foreign caller would.

use aphidcv_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;

fn last_error() -> String {
    unsafe { CStr::from_ptr(acv_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn iou_and_gap_match_known_values() {
    let mut value = 0.0f64;
    let status = unsafe { acv_bbox_iou(0, 0, 10, 10, 5, 5, 15, 15, &mut value) };
    assert_eq!(status, AcvStatus::Ok);
    assert_eq!(value, 25.0 / 175.0);

    let status = unsafe { acv_bbox_gap(0, 0, 10, 10, 16, 18, 20, 22, &mut value) };
    assert_eq!(status, AcvStatus::Ok);
    assert_eq!(value, 10.0);
}

#[test]
fn invalid_boxes_and_null_pointers_are_rejected() {
    let mut value = 0.0f64;
    let status = unsafe { acv_bbox_iou(10, 0, 0, 10, 0, 0, 5, 5, &mut value) };
    assert_eq!(status, AcvStatus::InvalidBox);
    assert!(last_error().contains("box a"));

    let status = unsafe { acv_bbox_iou(0, 0, 1, 1, 0, 0, 1, 1, std::ptr::null_mut()) };
    assert_eq!(status, AcvStatus::NullPointer);

    let status = unsafe { acv_bbox_gap(-1, 0, 5, 5, 0, 0, 5, 5, &mut value) };
    assert_eq!(status, AcvStatus::InvalidBox);
}

#[test]
fn merge_collapses_close_boxes() {
    let boxes: [i32; 8] = [0, 0, 10, 10, 20, 0, 30, 10];
    let mut merged = [0i32; 8];
    let mut len = 0usize;
    let status = unsafe {
        acv_merge_close_boxes(boxes.as_ptr(), 2, 10.0, merged.as_mut_ptr(), 2, &mut len)
    };
    assert_eq!(status, AcvStatus::Ok);
    assert_eq!(len, 1);
    assert_eq!(&merged[..4], &[0, 0, 30, 10]);

    // Capacity 0 reports the required size.
    let status = unsafe {
        acv_merge_close_boxes(boxes.as_ptr(), 2, 0.5, merged.as_mut_ptr(), 0, &mut len)
    };
    assert_eq!(status, AcvStatus::InvalidArgument);
    assert_eq!(len, 2);
    assert!(last_error().contains("capacity"));
}

#[test]
fn nms_keeps_best_scoring_indices() {
    // Two near-identical boxes and one far away.
    let boxes: [i32; 12] = [0, 0, 10, 10, 1, 0, 11, 10, 50, 50, 60, 60];
    let scores = [0.7f64, 0.9, 0.5];
    let mut keep = [0usize; 3];
    let mut len = 0usize;
    let status = unsafe {
        acv_nms(boxes.as_ptr(), scores.as_ptr(), 3, 0.5, keep.as_mut_ptr(), 3, &mut len)
    };
    assert_eq!(status, AcvStatus::Ok);
    assert_eq!(&keep[..len], &[1, 2]);

    let status = unsafe {
        acv_nms(boxes.as_ptr(), scores.as_ptr(), 3, 1.5, keep.as_mut_ptr(), 3, &mut len)
    };
    assert_eq!(status, AcvStatus::InvalidArgument);
}

fn write_fixture(dir: &Path) -> (CString, CString) {
    use aphidcv::annotation::{
        write_voc_file, AnnotatedImage, ClusterInstance, InstanceSource, View,
    };
    use aphidcv::geometry::BBox;

    let gt_dir = dir.join("gt");
    std::fs::create_dir_all(&gt_dir).unwrap();
    let image = AnnotatedImage {
        id: "img_x0_y0".into(),
        width: 400,
        height: 400,
        view: View::View1,
        instances: vec![
            ClusterInstance {
                id: 1,
                bbox: BBox::new(10, 10, 60, 60).unwrap(),
                area: None,
                source: InstanceSource::Labeled,
            },
            ClusterInstance {
                id: 2,
                bbox: BBox::new(200, 200, 280, 300).unwrap(),
                area: None,
                source: InstanceSource::Labeled,
            },
        ],
    };
    write_voc_file(&image, &gt_dir.join("img_x0_y0.xml")).unwrap();

    let preds = dir.join("preds.jsonl");
    std::fs::write(
        &preds,
        concat!(
            "{\"id\":\"img_x0_y0\",\"bbox\":[10,10,60,60],\"score\":0.9}\n",
            "{\"id\":\"img_x0_y0\",\"bbox\":[0,300,40,340],\"score\":0.4}\n",
        ),
    )
    .unwrap();

    (
        CString::new(gt_dir.to_str().unwrap()).unwrap(),
        CString::new(preds.to_str().unwrap()).unwrap(),
    )
}

#[test]
fn evaluate_produces_report_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, preds) = write_fixture(dir.path());
    let ious = [0.5f64, 0.75];
    let mut report: *mut AcvReport = std::ptr::null_mut();
    let status = unsafe {
        acv_evaluate(gt.as_ptr(), preds.as_ptr(), ious.as_ptr(), 2, -1.0, &mut report)
    };
    assert_eq!(status, AcvStatus::Ok, "{}", last_error());
    assert!(!report.is_null());

    unsafe {
        assert_eq!(acv_report_rows(report), 2);
        let (mut iou, mut ap, mut recall) = (0.0, 0.0, 0.0);
        let (mut tp, mut fp, mut missed) = (0u64, 0u64, 0u64);
        let status = acv_report_row(
            report, 0, &mut iou, &mut ap, &mut recall, &mut tp, &mut fp, &mut missed,
        );
        assert_eq!(status, AcvStatus::Ok);
        assert_eq!(iou, 0.5);
        assert_eq!((tp, fp, missed), (1, 1, 1));
        assert_eq!(recall, 0.5);
        assert!(ap > 0.0 && ap <= 0.5);

        let status = acv_report_row(
            report,
            5,
            std::ptr::null_mut(),
            std::ptr::null_mut(),
            std::ptr::null_mut(),
            std::ptr::null_mut(),
            std::ptr::null_mut(),
            std::ptr::null_mut(),
        );
        assert_eq!(status, AcvStatus::InvalidArgument);
        acv_report_free(report);
    }
}

#[test]
fn evaluate_maps_errors_to_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = write_fixture(dir.path());
    let missing = CString::new(dir.path().join("gone.jsonl").to_str().unwrap()).unwrap();
    let ious = [0.5f64];
    let mut report: *mut AcvReport = std::ptr::null_mut();
    let status = unsafe {
        acv_evaluate(gt.as_ptr(), missing.as_ptr(), ious.as_ptr(), 1, -1.0, &mut report)
    };
    assert_eq!(status, AcvStatus::IoError);
    assert!(last_error().contains("gone.jsonl"));
    assert!(report.is_null());
}

#[test]
fn header_is_generated_with_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/aphidcv.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for symbol in [
        "typedef struct AcvReport AcvReport;",
        "acv_bbox_iou",
        "acv_bbox_gap",
        "acv_merge_close_boxes",
        "acv_nms",
        "acv_evaluate",
        "acv_report_row",
        "acv_report_free",
        "acv_last_error",
        "AcvStatus",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}

#[test]
fn version_is_a_static_string() {
    let version = unsafe { CStr::from_ptr(acv_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
