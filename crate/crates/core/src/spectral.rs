//! Feature-map segmentation and spectral false-alarm removal.
//!
//! Otsu's histogram threshold splits the feature map into building and
//! background; NDVI and NDWI strip vegetation and water pixels that score
//! high on brightness alone. Images without the needed bands skip the
//! corresponding spectral test with a logged warning, so RGB-only inputs
//! still segment.

use crate::error::{Error, Result};
use crate::raster::{Band, FeatureMap, RasterImage};

/// Binary per-pixel building map for one acquisition date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildingMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BuildingMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("mask dimensions must be positive".into()));
        }
        if bits.len() != width * height {
            return Err(Error::DataLengthMismatch { expected: width * height, actual: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Number of building pixels.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Building pixels within the half-open rectangle `[x0, x1) x [y0, y1)`.
    pub fn count_in_rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> usize {
        let mut count = 0;
        for y in y0..y1 {
            for x in x0..x1 {
                if self.bits[y * self.width + x] {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Segmentation and spectral-cutoff settings.
///
/// Pixels with NDVI above `ndvi_threshold` are treated as vegetation and
/// removed; NDWI above `ndwi_threshold` as water. Both cutoffs are tunable —
/// 0.3 is a workable default for typical multispectral imagery, not a
/// calibrated constant — and are echoed into run metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskParams {
    pub ndvi_threshold: f64,
    pub ndwi_threshold: f64,
    pub histogram_bins: usize,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { ndvi_threshold: 0.3, ndwi_threshold: 0.3, histogram_bins: 256 }
    }
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("ndvi_threshold", self.ndvi_threshold), ("ndwi_threshold", self.ndwi_threshold)] {
            if !(t > -1.0 && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (-1, 1), got {t}"
                )));
            }
        }
        if self.histogram_bins < 2 {
            return Err(Error::InvalidParameter("histogram_bins must be >= 2".into()));
        }
        Ok(())
    }
}

fn bin_of(v: f64, bins: usize) -> usize {
    // v is in [0, 1]; exact 1.0 folds into the top bin.
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Histogram of a feature map over `bins` equal-width bins of `[0, 1]`.
pub fn histogram(fm: &FeatureMap, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &v in fm.values() {
        counts[bin_of(v, bins)] += 1;
    }
    counts
}

/// Otsu's threshold over a histogram of the feature map.
///
/// Returns the bin edge `t / bins` whose split maximizes the between-class
/// variance; among ties the lowest qualifying edge wins. A histogram with
/// fewer than two occupied bins cannot be split.
pub fn otsu_threshold(fm: &FeatureMap, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidParameter("histogram_bins must be >= 2".into()));
    }
    let counts = histogram(fm, bins);
    let split = otsu_split(&counts)?;
    Ok(split as f64 / bins as f64)
}

/// Index `t` such that classes `[0, t)` and `[t, bins)` maximize the
/// between-class variance `w0 * w1 * (mu0 - mu1)^2`.
pub fn otsu_split(counts: &[u64]) -> Result<usize> {
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let mut best_score = f64::NEG_INFINITY;
    let mut best_split = 0usize;
    // Prefix sums accumulate left to right; integer counts and bin indices
    // stay exact in f64, so every candidate's score is the same expression
    // over the same exact sums an exhaustive search would form.
    let mut w0 = 0.0f64;
    let mut s0 = 0.0f64;
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let total_sum: f64 = counts.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    for t in 1..counts.len() {
        w0 += counts[t - 1] as f64;
        s0 += (t - 1) as f64 * counts[t - 1] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = s0 / w0;
        let mu1 = (total_sum - s0) / w1;
        let score = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if score > best_score {
            best_score = score;
            best_split = t;
        }
    }
    Ok(best_split)
}

fn normalized_difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let denom = x + y;
            if denom == 0.0 {
                0.0
            } else {
                (x - y) / denom
            }
        })
        .collect()
}

/// Normalized difference vegetation index, `(nir - red) / (nir + red)`.
/// Zero-sum pixels map to 0.
pub fn ndvi(img: &RasterImage) -> Result<Band> {
    let nir = img.named_plane("nir").ok_or(Error::MissingBand { band: "nir" })?;
    let red = img.named_plane("red").ok_or(Error::MissingBand { band: "red" })?;
    Band::new(img.width(), img.height(), normalized_difference(nir, red))
}

/// Normalized difference water index, `(green - nir) / (green + nir)`.
/// Zero-sum pixels map to 0.
pub fn ndwi(img: &RasterImage) -> Result<Band> {
    let green = img.named_plane("green").ok_or(Error::MissingBand { band: "green" })?;
    let nir = img.named_plane("nir").ok_or(Error::MissingBand { band: "nir" })?;
    Band::new(img.width(), img.height(), normalized_difference(green, nir))
}

/// Result of segmentation: the mask plus the Otsu threshold actually used
/// (absent when the histogram was degenerate and the mask is empty).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome {
    pub mask: BuildingMask,
    pub otsu_threshold: Option<f64>,
}

/// Segment the feature map and remove vegetation/water false alarms.
///
/// A pixel is building when its feature value reaches the Otsu threshold
/// and neither spectral index flags it. A degenerate (single-level) feature
/// map yields an all-zero mask with a warning rather than an error.
pub fn building_mask(fm: &FeatureMap, img: &RasterImage, params: &MaskParams) -> Result<MaskOutcome> {
    params.validate()?;
    if fm.width() != img.width() || fm.height() != img.height() {
        return Err(Error::DimensionMismatch {
            expected: (img.width(), img.height()),
            actual: (fm.width(), fm.height()),
        });
    }
    let n = fm.width() * fm.height();
    let threshold = match otsu_threshold(fm, params.histogram_bins) {
        Ok(t) => t,
        Err(Error::DegenerateHistogram) => {
            log::warn!("feature map is single-valued; emitting an empty mask");
            let mask = BuildingMask::new(fm.width(), fm.height(), vec![false; n])?;
            return Ok(MaskOutcome { mask, otsu_threshold: None });
        }
        Err(e) => return Err(e),
    };
    let mut bits: Vec<bool> = fm.values().iter().map(|&v| v >= threshold).collect();

    match ndvi(img) {
        Ok(v) => {
            for (bit, &x) in bits.iter_mut().zip(v.values()) {
                *bit = *bit && x < params.ndvi_threshold;
            }
        }
        Err(Error::MissingBand { band }) => {
            log::warn!("no {band} band; skipping the vegetation test");
        }
        Err(e) => return Err(e),
    }
    match ndwi(img) {
        Ok(v) => {
            for (bit, &x) in bits.iter_mut().zip(v.values()) {
                *bit = *bit && x < params.ndwi_threshold;
            }
        }
        Err(Error::MissingBand { band }) => {
            log::warn!("no {band} band; skipping the water test");
        }
        Err(e) => return Err(e),
    }

    let mask = BuildingMask::new(fm.width(), fm.height(), bits)?;
    Ok(MaskOutcome { mask, otsu_threshold: Some(threshold) })
}
