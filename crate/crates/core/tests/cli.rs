//! End-to-end runs of the `aphidcv` binary.

use std::path::Path;
use std::process::{Command, Output};

fn aphidcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aphidcv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn synth_patchify_split_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let patches = dir.path().join("patches");
    let report = dir.path().join("report");
    let folds = dir.path().join("folds.json");

    ok(&aphidcv(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "3",
        "--images",
        "6",
        "--width",
        "800",
        "--height",
        "800",
        "--clusters",
        "8..12",
    ]));
    assert!(data.join("manifest.json").exists());
    assert!(data.join("predictions.jsonl").exists());
    assert!(data.join("masks/synth000.png").exists());

    let stats_out = ok(&aphidcv(&[
        "stats",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
    ]));
    assert!(stats_out.contains("clusters:"));
    assert!(stats_out.contains("view1"));

    let patchify_out = ok(&aphidcv(&[
        "patchify",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        patches.to_str().unwrap(),
        "--jobs",
        "2",
    ]));
    assert!(patchify_out.contains("patches kept"));
    assert!(patches.join("patches.json").exists());

    // k=2: six images, two per view.
    ok(&aphidcv(&[
        "split",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        folds.to_str().unwrap(),
        "--check",
    ]));
    assert!(folds.exists());

    let eval_out = ok(&aphidcv(&[
        "evaluate",
        "--gt",
        patches.join("patches.json").to_str().unwrap(),
        "--pred",
        data.join("predictions.jsonl").to_str().unwrap(),
        "--iou",
        "0.5,0.75",
        "--out",
        report.to_str().unwrap(),
        "--plot",
    ]));
    assert!(eval_out.contains("0.5"));
    assert!(report.join("report.csv").exists());
    assert!(report.join("report.json").exists());
    assert!(report.join("pr_iou_0_50.svg").exists());
    let csv = std::fs::read_to_string(report.join("report.csv")).unwrap();
    assert!(csv.starts_with("iou,ap,recall,tp,fp,fn\n"));
    assert_eq!(csv.lines().count(), 3);

    let crossval_out = ok(&aphidcv(&[
        "evaluate",
        "--gt",
        patches.join("patches.json").to_str().unwrap(),
        "--pred",
        data.join("predictions.jsonl").to_str().unwrap(),
        "--cross-val",
        folds.to_str().unwrap(),
    ]));
    assert!(crossval_out.contains("mean±std"));
}

#[test]
fn identical_seeds_give_identical_output_trees() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        ok(&aphidcv(&[
            "synth",
            "--out",
            dir.path().join(name).to_str().unwrap(),
            "--seed",
            "9",
            "--images",
            "6",
            "--width",
            "800",
            "--height",
            "800",
        ]));
    }
    assert_eq!(tree_bytes(&dir.path().join("a")), tree_bytes(&dir.path().join("b")));

    for name in ["pa", "pb"] {
        ok(&aphidcv(&[
            "patchify",
            "--manifest",
            dir.path().join("a/manifest.json").to_str().unwrap(),
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]));
    }
    assert_eq!(tree_bytes(&dir.path().join("pa")), tree_bytes(&dir.path().join("pb")));

    for name in ["fa", "fb"] {
        ok(&aphidcv(&[
            "split",
            "--manifest",
            dir.path().join("a/manifest.json").to_str().unwrap(),
            "--k",
            "2",
            "--seed",
            "4",
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]));
    }
    assert_eq!(
        std::fs::read(dir.path().join("fa")).unwrap(),
        std::fs::read(dir.path().join("fb")).unwrap()
    );
}

#[test]
fn stage_toggles_change_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&aphidcv(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "12",
        "--images",
        "2",
        "--width",
        "800",
        "--height",
        "800",
        "--neighbor-frac",
        "0.6",
    ]));

    let parse_counts = |out: &str| -> (u64, u64, u64) {
        let grab = |label: &str| -> u64 {
            out.lines()
                .find(|l| l.starts_with(label))
                .and_then(|l| l.split_whitespace().last())
                .and_then(|v| v.parse().ok())
                .unwrap_or_else(|| panic!("missing {label:?} in {out}"))
        };
        (
            grab("instances cropped:"),
            grab("after merge:"),
            grab("after tiny removal:"),
        )
    };

    let full = ok(&aphidcv(&[
        "patchify",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("full").to_str().unwrap(),
    ]));
    let (cropped, merged, removed) = parse_counts(&full);
    assert!(merged < cropped, "merging must reduce instances: {full}");
    assert!(removed < merged, "tiny removal must reduce instances: {full}");

    let off = ok(&aphidcv(&[
        "patchify",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("off").to_str().unwrap(),
        "--no-merge",
        "--no-remove-tiny",
    ]));
    let (cropped_off, merged_off, removed_off) = parse_counts(&off);
    assert_eq!(cropped_off, cropped);
    assert_eq!(merged_off, cropped_off, "merge disabled must not change counts");
    assert_eq!(removed_off, merged_off, "removal disabled must not change counts");
}

#[test]
fn errors_exit_nonzero_with_messages() {
    let dir = tempfile::tempdir().unwrap();

    // Missing manifest.
    let out = aphidcv(&[
        "patchify",
        "--manifest",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("p").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
    assert!(!dir.path().join("p").exists());

    // Undersized view for k=10.
    let data = dir.path().join("data");
    ok(&aphidcv(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "1",
        "--images",
        "5",
        "--width",
        "800",
        "--height",
        "800",
    ]));
    let out = aphidcv(&[
        "split",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--k",
        "10",
        "--seed",
        "0",
        "--out",
        dir.path().join("f.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("view"), "stderr: {stderr}");

    // Conflicting flags are rejected at parse time.
    let out = aphidcv(&[
        "patchify",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--annotation-only",
        "--crops",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot be used with"));
}

#[test]
fn zero_cluster_synth_flows_through() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&aphidcv(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "2",
        "--images",
        "1",
        "--width",
        "800",
        "--height",
        "800",
        "--clusters",
        "0",
    ]));
    let out = ok(&aphidcv(&[
        "patchify",
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("p").to_str().unwrap(),
    ]));
    assert!(out.contains("patches kept:         0"));
}
