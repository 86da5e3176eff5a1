//! Command-line entry point chaining the dataset toolkit end to end:
//! synthetic data generation, patchification, fold splitting, dataset
//! statistics, and detection evaluation.

use anyhow::{bail, Context, Result};
use aphidcv::annotation::{dataset_stats, DatasetManifest, View};
use aphidcv::patch::PipelineConfig;
use aphidcv::split::assign_folds;
use aphidcv::synth::{DetectorNoise, SceneConfig};
use aphidcv::workflow::{
    evaluate_cross_val, evaluate_files, patchify, synth_dataset, EvaluateArgs, PatchifyArgs,
    SynthArgs,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "aphidcv",
    version,
    about = "Dataset engineering and detection evaluation for aphid-cluster imagery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tile manifest images into annotated patches.
    Patchify(PatchifyCmd),
    /// Assign images to stratified cross-validation folds.
    Split(SplitCmd),
    /// Score a prediction file against patch ground truth.
    Evaluate(EvaluateCmd),
    /// Generate a synthetic dataset with simulated predictions.
    Synth(SynthCmd),
    /// Print annotation statistics for a dataset manifest.
    Stats(StatsCmd),
}

/// Pipeline stage flags shared by `patchify` and `synth`. Explicit flags
/// override the config file, which overrides the built-in defaults.
#[derive(Args, Clone)]
struct PipelineFlags {
    /// Pipeline config JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Patch side length in pixels.
    #[arg(long)]
    patch: Option<u32>,
    /// Window stride in pixels (patch/2 gives 50% overlap).
    #[arg(long)]
    stride: Option<u32>,
    /// Merge boxes whose closest distance is at most this many pixels.
    #[arg(long)]
    merge_px: Option<f64>,
    /// Remove instances below this fraction of the patch area.
    #[arg(long)]
    min_fraction: Option<f64>,
    /// Disable box merging.
    #[arg(long)]
    no_merge: bool,
    /// Disable tiny-instance removal.
    #[arg(long)]
    no_remove_tiny: bool,
}

impl PipelineFlags {
    fn build(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&raw)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(patch) = self.patch {
            config.patch = patch;
        }
        if let Some(stride) = self.stride {
            config.stride = stride;
        }
        if let Some(merge_px) = self.merge_px {
            config.merge_px = merge_px;
        }
        if let Some(min_fraction) = self.min_fraction {
            config.min_fraction = min_fraction;
        }
        if self.no_merge {
            config.merge = false;
        }
        if self.no_remove_tiny {
            config.remove_tiny = false;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct PatchifyCmd {
    /// Dataset manifest JSON.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineFlags,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Read instances from annotation XML files instead of masks.
    #[arg(long)]
    annotation_only: bool,
    /// Also write cropped patch rasters (needs source image files).
    #[arg(long, conflicts_with = "annotation_only")]
    crops: bool,
}

#[derive(Args)]
struct SplitCmd {
    /// Dataset manifest JSON.
    #[arg(long)]
    manifest: PathBuf,
    /// Number of folds.
    #[arg(long, default_value_t = 10)]
    k: u32,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assignment file to write.
    #[arg(long)]
    out: PathBuf,
    /// Verify stratification and print per-view fold sizes.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Ground truth: a directory of patch XML files or a patches.json.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction file (JSON lines).
    #[arg(long)]
    pred: PathBuf,
    /// Report directory; omit to print the summary only.
    #[arg(long)]
    out: Option<PathBuf>,
    /// IoU matching thresholds.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    iou: Vec<f64>,
    /// Apply per-patch NMS before scoring (defaults to 0.6 when given
    /// without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.6")]
    nms: Option<f64>,
    /// Also report the mean AP over IoU 0.50..0.95.
    #[arg(long)]
    coco: bool,
    /// Write an SVG PR plot per threshold (requires --out).
    #[arg(long, requires = "out")]
    plot: bool,
    /// Score cutoff for infestation coverage.
    #[arg(long, default_value_t = 0.3)]
    score_cutoff: f64,
    /// Aggregate per-fold results using this assignment file.
    #[arg(long, value_name = "ASSIGNMENT")]
    cross_val: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    /// Output directory (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
    /// Base seed; images derive their own seeds from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of images.
    #[arg(long, default_value_t = 3)]
    images: u32,
    #[arg(long, default_value_t = 1200)]
    width: u32,
    #[arg(long, default_value_t = 1200)]
    height: u32,
    /// Cluster count per image: a single number or MIN..MAX.
    #[arg(long, value_parser = parse_range, default_value = "26..36")]
    clusters: (u32, u32),
    /// Fraction of clusters placed within merge distance of a neighbor.
    #[arg(long, default_value_t = 0.35)]
    neighbor_frac: f64,
    /// Fraction of clusters straddling patch borders.
    #[arg(long, default_value_t = 0.30)]
    border_frac: f64,
    /// Detector corner jitter stddev in pixels.
    #[arg(long, default_value_t = 2.0)]
    jitter: f64,
    /// Detector miss probability for ordinary instances.
    #[arg(long, default_value_t = 0.02)]
    miss: f64,
    /// Mean spurious boxes per patch.
    #[arg(long, default_value_t = 0.25)]
    spurious: f64,
    /// Render RGB rasters next to the masks.
    #[arg(long, conflicts_with = "annotation_only")]
    render: bool,
    /// Write only annotations and the manifest (no PNG files).
    #[arg(long)]
    annotation_only: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct StatsCmd {
    /// Dataset manifest JSON.
    #[arg(long)]
    manifest: PathBuf,
    /// Also write the statistics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_range(raw: &str) -> Result<(u32, u32), String> {
    if let Some((lo, hi)) = raw.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| format!("bad range {raw:?}"))?;
        let hi: u32 = hi.trim().parse().map_err(|_| format!("bad range {raw:?}"))?;
        if lo > hi {
            return Err(format!("range {raw:?} is inverted"));
        }
        Ok((lo, hi))
    } else {
        let n: u32 = raw.trim().parse().map_err(|_| format!("bad count {raw:?}"))?;
        Ok((n, n))
    }
}

fn main() -> Result<()> {
    // Die quietly when stdout closes early (e.g. `aphidcv stats | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Patchify(cmd) => run_patchify(cmd, cli.quiet),
        Command::Split(cmd) => run_split(cmd, cli.quiet),
        Command::Evaluate(cmd) => run_evaluate(cmd, cli.quiet),
        Command::Synth(cmd) => run_synth(cmd, cli.quiet),
        Command::Stats(cmd) => run_stats(cmd),
    }
}

fn run_patchify(cmd: &PatchifyCmd, quiet: bool) -> Result<()> {
    let args = PatchifyArgs {
        config: cmd.pipeline.build()?,
        jobs: cmd.jobs,
        annotation_only: cmd.annotation_only,
        crop_images: cmd.crops,
    };
    let summary = patchify(&cmd.manifest, &cmd.out, &args)?;
    if !quiet {
        let c = summary.counts;
        println!("images processed:     {}", summary.images);
        println!("windows planned:      {}", c.windows);
        println!("instances cropped:    {}", c.cropped_instances);
        println!("after merge:          {}", c.after_merge);
        println!("after tiny removal:   {}", c.after_removal);
        println!(
            "patches kept:         {} (discarded {})",
            c.kept_patches, c.discarded_patches
        );
        println!("wrote {}", cmd.out.join("patches.json").display());
    }
    Ok(())
}

fn run_split(cmd: &SplitCmd, quiet: bool) -> Result<()> {
    let manifest = DatasetManifest::load(&cmd.manifest)?;
    let assignment = assign_folds(
        manifest.images.iter().map(|r| (r.id.as_str(), r.view)),
        cmd.k,
        cmd.seed,
    )?;
    assignment.save(&cmd.out)?;
    if cmd.check {
        let mut sizes: Vec<Vec<u64>> = vec![vec![0; cmd.k as usize]; View::ALL.len()];
        for record in &manifest.images {
            let fold = assignment.fold_of(&record.id).expect("just assigned");
            sizes[record.view as usize][fold as usize] += 1;
        }
        for view in View::ALL {
            let row = &sizes[view as usize];
            let lo = row.iter().min().copied().unwrap_or(0);
            let hi = row.iter().max().copied().unwrap_or(0);
            println!("{view}: fold sizes {row:?} (spread {})", hi - lo);
            if hi - lo > 1 && row.iter().any(|&c| c > 0) {
                bail!("stratification violated for {view}: spread {} > 1", hi - lo);
            }
        }
    }
    if !quiet {
        println!(
            "assigned {} images to {} folds (seed {}) -> {}",
            assignment.folds.len(),
            cmd.k,
            cmd.seed,
            cmd.out.display()
        );
    }
    Ok(())
}

fn run_evaluate(cmd: &EvaluateCmd, quiet: bool) -> Result<()> {
    let args = EvaluateArgs {
        iou_thresholds: cmd.iou.clone(),
        nms: cmd.nms,
        coco_mean: cmd.coco,
        infestation_score_cutoff: cmd.score_cutoff,
        plot: cmd.plot,
    };

    if let Some(assignment) = &cmd.cross_val {
        let rows = evaluate_cross_val(&cmd.gt, &cmd.pred, assignment, &args)?;
        println!("iou     AP mean±std       recall mean±std   folds");
        for row in rows {
            println!(
                "{:<7} {:5.1}±{:<10.2} {:5.1}±{:<10.2} {}",
                row.iou,
                100.0 * row.mean_ap,
                100.0 * row.std_ap,
                100.0 * row.mean_recall,
                100.0 * row.std_recall,
                row.folds
            );
        }
        return Ok(());
    }

    let report = evaluate_files(&cmd.gt, &cmd.pred, &args, cmd.out.as_deref())?;
    if !quiet {
        println!("iou     AP       recall   tp     fp     fn");
        for entry in &report.entries {
            println!(
                "{:<7} {:<8.4} {:<8.4} {:<6} {:<6} {:<6}",
                entry.iou, entry.ap, entry.recall, entry.tp, entry.fp, entry.missed
            );
        }
        if let Some(mean) = report.coco_mean_ap {
            println!("mean AP @[0.50:0.95]: {mean:.4}");
        }
        if let Some(out) = &cmd.out {
            println!("wrote {}", out.join("report.csv").display());
        }
    }
    Ok(())
}

fn run_synth(cmd: &SynthCmd, quiet: bool) -> Result<()> {
    let args = SynthArgs {
        images: cmd.images,
        scene: SceneConfig {
            width: cmd.width,
            height: cmd.height,
            min_clusters: cmd.clusters.0,
            max_clusters: cmd.clusters.1,
            neighbor_fraction: cmd.neighbor_frac,
            border_fraction: cmd.border_frac,
            seed: cmd.seed,
            ..SceneConfig::default()
        },
        noise: DetectorNoise {
            jitter_std: cmd.jitter,
            miss_prob: cmd.miss,
            spurious_rate: cmd.spurious,
            seed: cmd.seed,
            ..DetectorNoise::default()
        },
        pipeline: cmd.pipeline.build()?,
        render_images: cmd.render,
        annotation_only: cmd.annotation_only,
        jobs: cmd.jobs,
    };
    let summary = synth_dataset(&cmd.out, &args)?;
    if !quiet {
        println!(
            "generated {} images, {} clusters, {} patches, {} predictions -> {}",
            summary.images,
            summary.clusters,
            summary.patches,
            summary.predictions,
            cmd.out.display()
        );
    }
    Ok(())
}

fn run_stats(cmd: &StatsCmd) -> Result<()> {
    let manifest = DatasetManifest::load(&cmd.manifest)?;
    let base = cmd
        .manifest
        .parent()
        .unwrap_or_else(|| std::path::Path::new("."));
    let stats = dataset_stats(&manifest, base)?;

    println!("images:   {}", stats.images);
    for (view, count) in &stats.view_counts {
        println!(
            "  {view}: {count} ({:.1}%)",
            stats.view_percentages.get(view).copied().unwrap_or(0.0)
        );
    }
    println!("clusters: {}", stats.clusters);
    match (stats.median_area, stats.mean_area) {
        (Some(median), Some(mean)) => {
            println!("mask area: median {median:.0} px, mean {mean:.0} px");
        }
        _ => println!("mask area: n/a (no clusters)"),
    }
    let below: u64 = stats.histogram.iter().sum();
    if stats.clusters > 0 {
        println!(
            "areas below {} px: {below} ({:.1}%), larger: {}",
            stats.histogram_max_px,
            100.0 * below as f64 / stats.clusters as f64,
            stats.oversize
        );
        println!("histogram (bin {} px):", stats.histogram_bin_px);
        for (i, chunk) in stats.histogram.chunks(10).enumerate() {
            let lo = i as u32 * 10 * stats.histogram_bin_px;
            let hi = lo + 10 * stats.histogram_bin_px;
            let cells: Vec<String> = chunk.iter().map(|c| format!("{c:>6}")).collect();
            println!("  [{lo:>4},{hi:>5}) {}", cells.join(" "));
        }
    }
    if let Some(json_path) = &cmd.json {
        let mut body = serde_json::to_string_pretty(&stats)?;
        body.push('\n');
        std::fs::write(json_path, body)
            .with_context(|| format!("writing {}", json_path.display()))?;
        println!("wrote {}", json_path.display());
    }
    Ok(())
}
