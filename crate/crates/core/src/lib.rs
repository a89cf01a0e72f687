//! Building change detection from bi-temporal satellite imagery.
//!
//! The pipeline computes a building feature map per acquisition date with
//! multi-scale median filtering (MFBI), optionally gates it by a spectral
//! building mask, grids both maps and classifies each cell by the ratio of
//! its building areas. A morphological baseline (MBI) and a simple
//! differencing baseline are included for comparison, along with confusion
//! matrix evaluation against ground truth.

pub mod changegrid;
pub mod error;
pub mod eval;
pub mod filters;
pub mod io;
pub mod mbi;
pub mod raster;
pub mod spectral;

pub use changegrid::{
    change_map, change_map_diff_baseline, classify_cell, partition, BinaryLabel, ChangeConfig,
    GridCell, GridChangeMap, Label, Pattern, PixelRect,
};
pub use error::{Error, Result};
pub use eval::{confusion, t_sweep, ConfusionMatrix, ConfusionMatrix2, ConfusionMatrix3, TruthCell};
pub use filters::{
    differential_images, filter_profile, median_filter, mfbi, mfbi_from_band, ScaleProfile,
};
pub use io::{
    read_change_report, read_gray_image, read_mask, read_raster, read_truth_labels,
    write_change_image, write_change_map, write_change_report, write_gray_image, write_mask,
    write_raster, write_truth_labels, ChangeReport, ColoredLabel, GrayDepth,
};
pub use mbi::{mbi, mbi_from_band, white_top_hat_linear, Direction, MbiParams};
pub use raster::{enhanced_image, normalize_01, Band, FeatureMap, RasterImage};
pub use spectral::{
    building_mask, histogram, ndvi, ndwi, otsu_split, otsu_threshold, BuildingMask, MaskOutcome,
    MaskParams,
};
