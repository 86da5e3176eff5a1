//! Report serialization: JSON, CSV, and a self-contained SVG PR plot.

use super::{EvalReport, PrCurve};
use std::fmt::Write as _;

/// Pretty-printed JSON report.
pub fn report_to_json(report: &EvalReport) -> String {
    let mut body = serde_json::to_string_pretty(report).expect("report serializes");
    body.push('\n');
    body
}

/// CSV with one row per IoU threshold.
pub fn report_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("iou,ap,recall,tp,fp,fn\n");
    for entry in &report.entries {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{},{}",
            entry.iou, entry.ap, entry.recall, entry.tp, entry.fp, entry.missed
        );
    }
    out
}

const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn map_x(recall: f64) -> f64 {
    MARGIN + recall * (PLOT_W - 2.0 * MARGIN)
}

fn map_y(precision: f64) -> f64 {
    PLOT_H - MARGIN - precision * (PLOT_H - 2.0 * MARGIN)
}

/// Renders a PR curve as a standalone SVG document.
pub fn pr_curve_svg(curve: &PrCurve, iou: f64) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">Precision–Recall @ IoU {iou}</text>",
        PLOT_W / 2.0
    );

    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let x = map_x(v);
        let y = map_y(v);
        let _ = writeln!(
            svg,
            "  <line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>",
            map_y(0.0),
            map_y(1.0)
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>",
            map_x(0.0),
            map_x(1.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{v:.1}</text>",
            map_y(0.0) + 16.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{v:.1}</text>",
            map_x(0.0) - 6.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">recall</text>",
        PLOT_W / 2.0,
        PLOT_H - 10.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {:.1})\">precision</text>",
        PLOT_H / 2.0,
        PLOT_H / 2.0
    );

    if !curve.points.is_empty() {
        let mut path = format!("M {:.2} {:.2}", map_x(0.0), map_y(curve.points[0].precision));
        for point in &curve.points {
            let _ = write!(path, " L {:.2} {:.2}", map_x(point.recall), map_y(point.precision));
        }
        let _ = writeln!(
            svg,
            "  <path d=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>"
        );
        for point in &curve.points {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#1f77b4\"/>",
                map_x(point.recall),
                map_y(point.precision)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
