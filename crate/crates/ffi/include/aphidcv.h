#ifndef APHIDCV_H
#define APHIDCV_H

/* Generated by cbindgen from aphidcv-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>
typedef struct AcvReport AcvReport;

// Result code of every FFI call.
typedef enum AcvStatus {
  AcvStatus_Ok = 0,
  // A required pointer argument was null.
  AcvStatus_NullPointer = 1,
  // Box coordinates were negative, inverted or empty.
  AcvStatus_InvalidBox = 2,
  // An argument was out of range (thresholds, capacities, indices).
  AcvStatus_InvalidArgument = 3,
  // Input files were malformed.
  AcvStatus_ParseError = 4,
  // A file could not be read or written.
  AcvStatus_IoError = 5,
  // Evaluation was impossible (for example no ground truth).
  AcvStatus_EvalError = 6,
  // A path or string argument was not valid UTF-8.
  AcvStatus_Utf8Error = 7,
} AcvStatus;

// Message describing the calling thread's most recent failure. The
// pointer stays valid until the next FFI call on the same thread.
const char *acv_last_error(void);

// Intersection-over-union of two boxes.
//
// # Safety
// `out` must point to a writable `double`.
enum AcvStatus acv_bbox_iou(int32_t a_min_x,
                            int32_t a_min_y,
                            int32_t a_max_x,
                            int32_t a_max_y,
                            int32_t b_min_x,
                            int32_t b_min_y,
                            int32_t b_max_x,
                            int32_t b_max_y,
                            double *out);

// Closest Euclidean distance between two boxes (0 when they touch).
//
// # Safety
// `out` must point to a writable `double`.
enum AcvStatus acv_bbox_gap(int32_t a_min_x,
                            int32_t a_min_y,
                            int32_t a_max_x,
                            int32_t a_max_y,
                            int32_t b_min_x,
                            int32_t b_min_y,
                            int32_t b_max_x,
                            int32_t b_max_y,
                            double *out);

// Transitively merges boxes whose gap is at most `threshold_px` and
// writes the merged boxes (sorted by `min_y`, `min_x`) to `out_boxes`.
// The output never holds more boxes than the input, so a capacity of
// `n_boxes` always suffices.
//
// # Safety
// `boxes` must hold `4 * n_boxes` readable values, `out_boxes`
// `4 * capacity` writable ones, and `out_len` one writable `size_t`.
enum AcvStatus acv_merge_close_boxes(const int32_t *boxes,
                                     size_t n_boxes,
                                     double threshold_px,
                                     int32_t *out_boxes,
                                     size_t capacity,
                                     size_t *out_len);

// Greedy non-maximum suppression. Writes the indices of kept boxes, in
// keep order, to `keep`. A capacity of `n_boxes` always suffices.
//
// # Safety
// `boxes` must hold `4 * n_boxes` readable values, `scores` `n_boxes`,
// `keep` `capacity` writable ones, and `out_len` one writable `size_t`.
enum AcvStatus acv_nms(const int32_t *boxes,
                       const double *scores,
                       size_t n_boxes,
                       double iou_threshold,
                       size_t *keep,
                       size_t capacity,
                       size_t *out_len);

// Evaluates a JSONL prediction file against ground truth (a directory
// of patch XML files or a patches.json manifest) at the given IoU
// thresholds. Pass a negative `nms_threshold` to skip NMS. On success
// `*out` owns a report; release it with `acv_report_free`.
//
// # Safety
// `gt_path` and `predictions_path` must be NUL-terminated strings,
// `ious` must hold `n_ious` readable values, and `out` one writable
// pointer.
enum AcvStatus acv_evaluate(const char *gt_path,
                            const char *predictions_path,
                            const double *ious,
                            size_t n_ious,
                            double nms_threshold,
                            AcvReport **out);

// Number of IoU-threshold rows in the report.
//
// # Safety
// `report` must be a live pointer from `acv_evaluate` (or null).
size_t acv_report_rows(const AcvReport *report);

// Copies one report row. Null metric pointers are skipped.
//
// # Safety
// `report` must be a live pointer from `acv_evaluate`; non-null metric
// pointers must be writable.
enum AcvStatus acv_report_row(const AcvReport *report,
                              size_t index,
                              double *iou,
                              double *ap,
                              double *recall,
                              uint64_t *tp,
                              uint64_t *fp,
                              uint64_t *missed);

// Releases a report returned by `acv_evaluate`. Null is a no-op.
//
// # Safety
// `report` must be a pointer from `acv_evaluate` that has not been
// freed yet.
void acv_report_free(AcvReport *report);

// Version of the underlying toolkit as a static string.
const char *acv_version(void);

#endif  /* APHIDCV_H */
