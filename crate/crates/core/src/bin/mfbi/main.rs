//! Command-line front end for the building change detection pipeline.
//!
//! Subcommands compose through files: `index` turns a raster into a feature
//! map, `mask` segments it, `change`/`change-baseline` grid two masks into a
//! change map, `eval` scores a report against truth, and `pipeline` chains
//! the stages for two acquisition dates. `bench` and `sweep` reproduce the
//! timing and threshold-sensitivity experiments.

mod config;
mod synth;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{ChangeArgs, FileConfig, MaskArgs, MbiArgs, Method, ProfileArgs, RunConfig};
use mfbi_core::{
    building_mask, change_map, change_map_diff_baseline, confusion, mbi, mfbi, read_change_report,
    read_gray_image, read_mask, read_raster, read_truth_labels, t_sweep, write_change_map,
    write_gray_image, write_mask, ChangeReport, ColoredLabel, ConfusionMatrix, FeatureMap,
    GrayDepth, GridChangeMap, Label, Pattern, RasterImage,
};

#[derive(Parser)]
#[command(name = "mfbi", version, about = "Building change detection from bi-temporal rasters")]
struct Cli {
    /// Config file supplying defaults; flags take precedence over it.
    #[arg(long, global = true, value_name = "TOML")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a building index feature map from a raster.
    Index(IndexCmd),
    /// Segment a building mask from a raster and its feature map.
    Mask(MaskCmd),
    /// Classify grid cells by the ratio of building areas in two masks.
    Change(ChangeCmd),
    /// Classify grid cells by absolute building-area difference.
    ChangeBaseline(ChangeCmd),
    /// Score a change report against truth labels.
    Eval(EvalCmd),
    /// Time the median-filter index against the morphological index.
    Bench(BenchCmd),
    /// Overall accuracy across a list of change thresholds.
    Sweep(SweepCmd),
    /// Run index, mask and change end to end for two dates.
    Pipeline(PipelineCmd),
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let file = config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Index(cmd) => cmd_index(cmd, &file),
        Command::Mask(cmd) => cmd_mask(cmd, &file),
        Command::Change(cmd) => cmd_change(cmd, &file, false),
        Command::ChangeBaseline(cmd) => cmd_change(cmd, &file, true),
        Command::Eval(cmd) => cmd_eval(cmd, &file),
        Command::Bench(cmd) => cmd_bench(cmd, &file),
        Command::Sweep(cmd) => cmd_sweep(cmd, &file),
        Command::Pipeline(cmd) => cmd_pipeline(cmd, &file),
    }
}

// ---------------------------------------------------------------------------
// index

#[derive(Args)]
struct IndexCmd {
    /// Input raster in the flat container format.
    #[arg(long = "in", value_name = "RASTER")]
    input: PathBuf,
    /// Output feature map, written as a 16-bit graymap.
    #[arg(long = "out", value_name = "PGM")]
    output: PathBuf,
    /// Building index to compute.
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    mbi: MbiArgs,
}

fn compute_index(img: &RasterImage, run: &RunConfig) -> Result<(FeatureMap, f64)> {
    let start = Instant::now();
    let fm = match run.method {
        Method::Mfbi => mfbi(img, &run.profile)?,
        Method::Mbi => mbi(img, &run.mbi)?,
    };
    Ok((fm, start.elapsed().as_secs_f64()))
}

fn cmd_index(cmd: &IndexCmd, file: &FileConfig) -> Result<()> {
    let run = config::resolve_run(
        cmd.method,
        &cmd.profile,
        &cmd.mbi,
        &Default::default(),
        &Default::default(),
        file,
    )?;
    let img = read_raster(&cmd.input)?;
    let (fm, seconds) = compute_index(&img, &run)?;
    write_gray_image(&fm, &cmd.output, GrayDepth::Bits16)?;
    let meta = config::metadata_json(
        "index",
        &[("in", &cmd.input), ("out", &cmd.output)],
        &run,
        &[],
    );
    config::write_sidecar(&cmd.output, &meta)?;
    println!("compute_seconds={seconds:.6}");
    Ok(())
}

// ---------------------------------------------------------------------------
// mask

#[derive(Args)]
struct MaskCmd {
    /// Input raster; spectral bands are used for false-alarm removal.
    #[arg(long = "in", value_name = "RASTER")]
    input: PathBuf,
    /// Feature map graymap matching the raster's dimensions.
    #[arg(long, value_name = "PGM")]
    feature: PathBuf,
    /// Output mask graymap (0/255).
    #[arg(long = "out", value_name = "PGM")]
    output: PathBuf,
    #[command(flatten)]
    mask: MaskArgs,
}

fn fmt_threshold(t: Option<f64>) -> String {
    t.map_or_else(|| "none".into(), |v| v.to_string())
}

fn cmd_mask(cmd: &MaskCmd, file: &FileConfig) -> Result<()> {
    let run = config::resolve_run(
        None,
        &Default::default(),
        &Default::default(),
        &cmd.mask,
        &Default::default(),
        file,
    )?;
    let img = read_raster(&cmd.input)?;
    let band = read_gray_image(&cmd.feature)?;
    let fm = FeatureMap::new(band.width(), band.height(), band.into_values())?;
    let outcome = building_mask(&fm, &img, &run.mask)?;
    write_mask(&outcome.mask, &cmd.output)?;
    let meta = config::metadata_json(
        "mask",
        &[("feature", &cmd.feature), ("in", &cmd.input), ("out", &cmd.output)],
        &run,
        &[("otsu_threshold", serde_json::json!(outcome.otsu_threshold))],
    );
    config::write_sidecar(&cmd.output, &meta)?;
    println!("otsu_threshold={}", fmt_threshold(outcome.otsu_threshold));
    Ok(())
}

// ---------------------------------------------------------------------------
// change / change-baseline

#[derive(Args)]
struct ChangeCmd {
    /// Date-1 building mask.
    #[arg(long, value_name = "PGM")]
    t1: PathBuf,
    /// Date-2 building mask.
    #[arg(long, value_name = "PGM")]
    t2: PathBuf,
    /// Output colored change image.
    #[arg(long = "out-image", value_name = "PPM")]
    out_image: PathBuf,
    /// Output cell report.
    #[arg(long = "out-report", value_name = "TXT")]
    out_report: PathBuf,
    #[command(flatten)]
    change: ChangeArgs,
}

fn finish_change<L: ColoredLabel>(
    map: &GridChangeMap<L>,
    cmd: &ChangeCmd,
    run: &RunConfig,
    command: &str,
) -> Result<()> {
    write_change_map(map, &cmd.out_image, &cmd.out_report)?;
    // Echo the config the map actually used (noise floor resolved).
    let run = RunConfig { change: *map.config(), ..run.clone() };
    let meta = config::metadata_json(
        command,
        &[
            ("out-image", &cmd.out_image),
            ("out-report", &cmd.out_report),
            ("t1", &cmd.t1),
            ("t2", &cmd.t2),
        ],
        &run,
        &[],
    );
    config::write_sidecar(&cmd.out_report, &meta)?;
    println!("cells={}", map.cells().len());
    Ok(())
}

fn cmd_change(cmd: &ChangeCmd, file: &FileConfig, baseline: bool) -> Result<()> {
    let run = config::resolve_run(
        None,
        &Default::default(),
        &Default::default(),
        &Default::default(),
        &cmd.change,
        file,
    )?;
    let t1 = read_mask(&cmd.t1)?;
    let t2 = read_mask(&cmd.t2)?;
    if baseline {
        let map = change_map_diff_baseline(&t1, &t2, &run.change)?;
        finish_change(&map, cmd, &run, "change-baseline")
    } else {
        let map = change_map(&t1, &t2, &run.change)?;
        finish_change(&map, cmd, &run, "change")
    }
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args)]
struct EvalCmd {
    /// Change report to score.
    #[arg(long, value_name = "TXT")]
    report: PathBuf,
    /// Truth labels CSV (row,col,label).
    #[arg(long, value_name = "CSV")]
    truth: PathBuf,
    /// Output confusion matrix CSV.
    #[arg(long = "out", value_name = "CSV")]
    output: PathBuf,
}

/// Wide confusion-matrix CSV: rows predicted, columns truth.
fn matrix_csv<L: Label>(matrix: &ConfusionMatrix<L>) -> String {
    let mut out = String::from("predicted/truth");
    for truth in L::ALL {
        out.push(',');
        out.push_str(truth.code());
    }
    out.push('\n');
    for predicted in L::ALL {
        out.push_str(predicted.code());
        for truth in L::ALL {
            out.push_str(&format!(",{}", matrix.count(*predicted, *truth)));
        }
        out.push('\n');
    }
    out
}

fn score_report<L: ColoredLabel>(
    map: &GridChangeMap<L>,
    cmd: &EvalCmd,
    run: &RunConfig,
) -> Result<()> {
    let truth = read_truth_labels::<L>(&cmd.truth)?;
    let matrix = confusion(map, &truth)?;
    let csv = matrix_csv(&matrix);
    fs::write(&cmd.output, &csv)
        .with_context(|| format!("writing {}", cmd.output.display()))?;
    let run = RunConfig { change: *map.config(), ..run.clone() };
    let meta = config::metadata_json(
        "eval",
        &[("out", &cmd.output), ("report", &cmd.report), ("truth", &cmd.truth)],
        &run,
        &[("overall_accuracy", serde_json::json!(matrix.overall_accuracy()))],
    );
    config::write_sidecar(&cmd.output, &meta)?;
    print!("{csv}");
    println!("OA={:.2}", matrix.overall_accuracy());
    Ok(())
}

fn cmd_eval(cmd: &EvalCmd, file: &FileConfig) -> Result<()> {
    let run = config::resolve_run(
        None,
        &Default::default(),
        &Default::default(),
        &Default::default(),
        &Default::default(),
        file,
    )?;
    match read_change_report(&cmd.report)? {
        ChangeReport::Pattern(map) => score_report(&map, cmd, &run),
        ChangeReport::Binary(map) => score_report(&map, cmd, &run),
    }
}

// ---------------------------------------------------------------------------
// bench

#[derive(Args)]
struct BenchCmd {
    /// Synthetic raster width.
    #[arg(long, default_value_t = 1024)]
    width: usize,
    /// Synthetic raster height.
    #[arg(long, default_value_t = 1024)]
    height: usize,
    /// Number of spectral bands.
    #[arg(long, default_value_t = 4)]
    bands: usize,
    /// Timed repetitions per method.
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Seed for the synthetic raster.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Timing CSV path; printed to standard output when omitted.
    #[arg(long = "out", value_name = "CSV")]
    output: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    mbi: MbiArgs,
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

fn cmd_bench(cmd: &BenchCmd, file: &FileConfig) -> Result<()> {
    if cmd.repetitions == 0 {
        bail!("repetitions must be >= 1");
    }
    if cmd.width == 0 || cmd.height == 0 || cmd.bands == 0 {
        bail!("raster dimensions and band count must be positive");
    }
    let run = config::resolve_run(
        None,
        &cmd.profile,
        &cmd.mbi,
        &Default::default(),
        &Default::default(),
        file,
    )?;
    let img = synth::synth_raster(cmd.width, cmd.height, cmd.bands, cmd.seed)?;

    let mut csv = String::from("method,run,seconds\n");
    let mut time_runs = |name: &str, f: &dyn Fn() -> mfbi_core::Result<FeatureMap>| {
        let mut seconds = Vec::with_capacity(cmd.repetitions);
        for rep in 0..cmd.repetitions {
            let start = Instant::now();
            let fm = f()?;
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(&fm);
            csv.push_str(&format!("{name},{rep},{elapsed:.6}\n"));
            seconds.push(elapsed);
        }
        Ok::<_, mfbi_core::Error>(seconds)
    };
    let mfbi_seconds = time_runs("mfbi", &|| mfbi(&img, &run.profile))?;
    let mbi_seconds = time_runs("mbi", &|| mbi(&img, &run.mbi))?;

    match &cmd.output {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            let meta = config::metadata_json(
                "bench",
                &[("out", path)],
                &run,
                &[
                    ("bands", serde_json::json!(cmd.bands)),
                    ("height", serde_json::json!(cmd.height)),
                    ("repetitions", serde_json::json!(cmd.repetitions)),
                    ("seed", serde_json::json!(cmd.seed)),
                    ("width", serde_json::json!(cmd.width)),
                ],
            );
            config::write_sidecar(path, &meta)?;
        }
        None => print!("{csv}"),
    }
    let median_mfbi = median(&mfbi_seconds);
    let median_mbi = median(&mbi_seconds);
    println!("median_seconds_mfbi={median_mfbi:.6}");
    println!("median_seconds_mbi={median_mbi:.6}");
    println!("speedup={:.2}", median_mbi / median_mfbi);
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args)]
struct SweepCmd {
    /// Date-1 building mask.
    #[arg(long, value_name = "PGM")]
    t1: PathBuf,
    /// Date-2 building mask.
    #[arg(long, value_name = "PGM")]
    t2: PathBuf,
    /// Truth labels CSV (row,col,label).
    #[arg(long, value_name = "CSV")]
    truth: PathBuf,
    /// Change thresholds to evaluate, comma separated; each must exceed 1.
    #[arg(long = "t", value_name = "LIST", value_delimiter = ',', required = true)]
    t_values: Vec<f64>,
    /// Output CSV of (T, overall accuracy).
    #[arg(long = "out", value_name = "CSV")]
    output: PathBuf,
    #[command(flatten)]
    change: ChangeArgs,
}

fn cmd_sweep(cmd: &SweepCmd, file: &FileConfig) -> Result<()> {
    let run = config::resolve_run(
        None,
        &Default::default(),
        &Default::default(),
        &Default::default(),
        &cmd.change,
        file,
    )?;
    let t1 = read_mask(&cmd.t1)?;
    let t2 = read_mask(&cmd.t2)?;
    let truth = read_truth_labels::<Pattern>(&cmd.truth)?;
    let rows = t_sweep(&t1, &t2, &truth, &run.change, &cmd.t_values)?;
    let mut csv = String::from("T,overall_accuracy\n");
    for (t, oa) in rows {
        csv.push_str(&format!("{t},{oa:.2}\n"));
    }
    fs::write(&cmd.output, &csv)
        .with_context(|| format!("writing {}", cmd.output.display()))?;
    let meta = config::metadata_json(
        "sweep",
        &[("out", &cmd.output), ("t1", &cmd.t1), ("t2", &cmd.t2), ("truth", &cmd.truth)],
        &run,
        &[("t_values", serde_json::json!(cmd.t_values))],
    );
    config::write_sidecar(&cmd.output, &meta)?;
    print!("{csv}");
    Ok(())
}

// ---------------------------------------------------------------------------
// pipeline

#[derive(Args)]
struct PipelineCmd {
    /// Date-1 raster.
    #[arg(long, value_name = "RASTER")]
    t1: PathBuf,
    /// Date-2 raster.
    #[arg(long, value_name = "RASTER")]
    t2: PathBuf,
    /// Directory receiving every artifact.
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: PathBuf,
    /// Truth labels CSV; when given, the change map is scored.
    #[arg(long, value_name = "CSV")]
    truth: Option<PathBuf>,
    /// Building index to compute.
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    mbi: MbiArgs,
    #[command(flatten)]
    mask: MaskArgs,
    #[command(flatten)]
    change: ChangeArgs,
}

fn cmd_pipeline(cmd: &PipelineCmd, file: &FileConfig) -> Result<()> {
    let run = config::resolve_run(
        cmd.method,
        &cmd.profile,
        &cmd.mbi,
        &cmd.mask,
        &cmd.change,
        file,
    )?;
    fs::create_dir_all(&cmd.out_dir)
        .with_context(|| format!("creating {}", cmd.out_dir.display()))?;

    let mut masks = Vec::with_capacity(2);
    let mut otsu = Vec::with_capacity(2);
    for (tag, input) in [("t1", &cmd.t1), ("t2", &cmd.t2)] {
        let img = read_raster(input)?;
        let (fm, seconds) = compute_index(&img, &run)?;
        log::info!("{tag}: computed {} in {seconds:.3}s", run.method.name());
        let fm_path = cmd.out_dir.join(format!("{tag}_{}.pgm", run.method.name()));
        write_gray_image(&fm, &fm_path, GrayDepth::Bits16)?;
        let outcome = building_mask(&fm, &img, &run.mask)?;
        write_mask(&outcome.mask, cmd.out_dir.join(format!("{tag}_mask.pgm")))?;
        otsu.push(outcome.otsu_threshold);
        masks.push(outcome.mask);
    }

    let map = change_map(&masks[0], &masks[1], &run.change)?;
    let image_path = cmd.out_dir.join("change.ppm");
    let report_path = cmd.out_dir.join("change_report.txt");
    write_change_map(&map, &image_path, &report_path)?;
    println!("cells={}", map.cells().len());

    if let Some(truth_path) = &cmd.truth {
        let truth = read_truth_labels::<Pattern>(truth_path)?;
        let matrix = confusion(&map, &truth)?;
        let csv = matrix_csv(&matrix);
        fs::write(cmd.out_dir.join("confusion.csv"), &csv)
            .with_context(|| format!("writing {}", cmd.out_dir.join("confusion.csv").display()))?;
        print!("{csv}");
        println!("OA={:.2}", matrix.overall_accuracy());
    }

    let run = RunConfig { change: *map.config(), ..run };
    let mut extra = vec![
        ("otsu_threshold_t1", serde_json::json!(otsu[0])),
        ("otsu_threshold_t2", serde_json::json!(otsu[1])),
    ];
    let mut paths: Vec<(&str, &std::path::Path)> =
        vec![("out-dir", &cmd.out_dir), ("t1", &cmd.t1), ("t2", &cmd.t2)];
    if let Some(truth_path) = &cmd.truth {
        paths.push(("truth", truth_path));
    }
    extra.sort_by_key(|(k, _)| *k);
    let meta = config::metadata_json("pipeline", &paths, &run, &extra);
    fs::write(cmd.out_dir.join("run.meta.json"), meta)
        .with_context(|| format!("writing {}", cmd.out_dir.join("run.meta.json").display()))?;
    Ok(())
}
