//! Run configuration: built-in defaults, an optional config file, and
//! command-line flags, in increasing order of precedence.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Deserialize;
use serde_json::json;

use mfbi_core::{ChangeConfig, MaskParams, MbiParams, ScaleProfile};

/// Which building index the pipeline computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mfbi,
    Mbi,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mfbi => "mfbi",
            Method::Mbi => "mbi",
        }
    }
}

/// Values read from a `--config` file. Every field is optional; any flag
/// given on the command line overrides its file counterpart.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub initial_window: Option<usize>,
    pub scale_factor: Option<usize>,
    pub num_scales: Option<usize>,
    pub directions: Option<usize>,
    pub scale_min: Option<usize>,
    pub scale_max: Option<usize>,
    pub scale_step: Option<usize>,
    pub ndvi_threshold: Option<f64>,
    pub ndwi_threshold: Option<f64>,
    pub histogram_bins: Option<usize>,
    pub n_segments: Option<usize>,
    pub change_threshold: Option<f64>,
    pub min_area_floor: Option<f64>,
    pub diff_threshold: Option<f64>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

/// Median-filter scale ladder flags.
#[derive(Debug, Default, clap::Args)]
pub struct ProfileArgs {
    /// Smallest median window in pixels.
    #[arg(long)]
    pub initial_window: Option<usize>,
    /// Multiplier between consecutive windows.
    #[arg(long)]
    pub scale_factor: Option<usize>,
    /// Number of filtering scales.
    #[arg(long)]
    pub num_scales: Option<usize>,
}

/// Morphological index flags.
#[derive(Debug, Default, clap::Args)]
pub struct MbiArgs {
    /// Number of line directions over the half turn.
    #[arg(long)]
    pub directions: Option<usize>,
    /// Shortest line length in pixels.
    #[arg(long)]
    pub scale_min: Option<usize>,
    /// Longest line length in pixels.
    #[arg(long)]
    pub scale_max: Option<usize>,
    /// Length increment between scales.
    #[arg(long)]
    pub scale_step: Option<usize>,
}

/// Building-mask segmentation flags.
#[derive(Debug, Default, clap::Args)]
pub struct MaskArgs {
    /// Pixels with NDVI above this are dropped as vegetation.
    #[arg(long)]
    pub ndvi_threshold: Option<f64>,
    /// Pixels with NDWI above this are dropped as water.
    #[arg(long)]
    pub ndwi_threshold: Option<f64>,
    /// Histogram resolution for the Otsu threshold.
    #[arg(long)]
    pub histogram_bins: Option<usize>,
}

/// Grid classification flags.
#[derive(Debug, Default, clap::Args)]
pub struct ChangeArgs {
    /// Grid segments per axis.
    #[arg(long)]
    pub n_segments: Option<usize>,
    /// Area-ratio change threshold (must exceed 1).
    #[arg(long)]
    pub change_threshold: Option<f64>,
    /// Noise floor in pixels; defaults to 0.5% of the mean cell area.
    #[arg(long)]
    pub min_area_floor: Option<f64>,
    /// Absolute area difference threshold for the baseline classifier.
    #[arg(long)]
    pub diff_threshold: Option<f64>,
}

/// Fully resolved run configuration, echoed into every metadata sidecar.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub profile: ScaleProfile,
    pub mbi: MbiParams,
    pub mask: MaskParams,
    pub change: ChangeConfig,
}

pub fn resolve_run(
    method: Option<Method>,
    profile: &ProfileArgs,
    mbi: &MbiArgs,
    mask: &MaskArgs,
    change: &ChangeArgs,
    file: &FileConfig,
) -> Result<RunConfig> {
    let method = match (method, &file.method) {
        (Some(m), _) => m,
        (None, Some(s)) => Method::from_str(s, true)
            .map_err(|_| anyhow::anyhow!("config file: unknown method {s:?}"))?,
        (None, None) => Method::Mfbi,
    };
    let dp = ScaleProfile::default();
    let profile = ScaleProfile::new(
        profile.initial_window.or(file.initial_window).unwrap_or(dp.initial_window),
        profile.scale_factor.or(file.scale_factor).unwrap_or(dp.scale_factor),
        profile.num_scales.or(file.num_scales).unwrap_or(dp.num_scales),
    )?;
    let dm = MbiParams::default();
    let mbi = MbiParams::new(
        mbi.directions.or(file.directions).unwrap_or(dm.directions),
        mbi.scale_min.or(file.scale_min).unwrap_or(dm.scale_min),
        mbi.scale_max.or(file.scale_max).unwrap_or(dm.scale_max),
        mbi.scale_step.or(file.scale_step).unwrap_or(dm.scale_step),
    )?;
    let dk = MaskParams::default();
    let mask = MaskParams {
        ndvi_threshold: mask.ndvi_threshold.or(file.ndvi_threshold).unwrap_or(dk.ndvi_threshold),
        ndwi_threshold: mask.ndwi_threshold.or(file.ndwi_threshold).unwrap_or(dk.ndwi_threshold),
        histogram_bins: mask.histogram_bins.or(file.histogram_bins).unwrap_or(dk.histogram_bins),
    };
    mask.validate()?;
    let dc = ChangeConfig::default();
    let change = ChangeConfig {
        n_segments: change.n_segments.or(file.n_segments).unwrap_or(dc.n_segments),
        change_threshold: change
            .change_threshold
            .or(file.change_threshold)
            .unwrap_or(dc.change_threshold),
        min_area_floor: change.min_area_floor.or(file.min_area_floor),
        diff_threshold: change.diff_threshold.or(file.diff_threshold),
    };
    change.validate()?;
    Ok(RunConfig { method, profile, mbi, mask, change })
}

/// Serialize the resolved configuration plus command context. Keys come out
/// sorted, so reruns produce byte-identical metadata.
pub fn metadata_json(
    command: &str,
    paths: &[(&str, &Path)],
    run: &RunConfig,
    extra: &[(&str, serde_json::Value)],
) -> String {
    let mut path_map = serde_json::Map::new();
    for (key, path) in paths {
        path_map.insert((*key).into(), json!(path.display().to_string()));
    }
    let mut root = json!({
        "command": command,
        "paths": path_map,
        "method": run.method.name(),
        "scale_profile": {
            "initial_window": run.profile.initial_window,
            "scale_factor": run.profile.scale_factor,
            "num_scales": run.profile.num_scales,
        },
        "mbi_params": {
            "directions": run.mbi.directions,
            "scale_min": run.mbi.scale_min,
            "scale_max": run.mbi.scale_max,
            "scale_step": run.mbi.scale_step,
        },
        "mask_params": {
            "ndvi_threshold": run.mask.ndvi_threshold,
            "ndwi_threshold": run.mask.ndwi_threshold,
            "histogram_bins": run.mask.histogram_bins,
        },
        "change_config": {
            "n_segments": run.change.n_segments,
            "change_threshold": run.change.change_threshold,
            "min_area_floor": run.change.min_area_floor,
            "diff_threshold": run.change.diff_threshold,
        },
    });
    let fields = root.as_object_mut().expect("object root");
    for (key, value) in extra {
        fields.insert((*key).into(), value.clone());
    }
    serde_json::to_string_pretty(&root).expect("config serializes") + "\n"
}

/// Write `<output>.meta.json` next to an output file.
pub fn write_sidecar(output: &Path, metadata: &str) -> Result<()> {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    let path = PathBuf::from(name);
    fs::write(&path, metadata).with_context(|| format!("writing {}", path.display()))
}
