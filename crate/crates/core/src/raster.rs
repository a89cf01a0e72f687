//! Raster data model: multi-band images, single-band rasters and normalized
//! feature maps.
//!
//! All types are immutable after construction and validate their invariants
//! up front: dimensions are positive, data lengths match, and every value is
//! finite. Downstream stages rely on those guarantees and skip re-checking.

use crate::error::{Error, Result};

/// Multi-band floating-point raster, row-major and band-planar.
///
/// Pixel values are carried as `f64` regardless of the source bit depth;
/// 8/16-bit imagery is promoted on load.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    band_names: Vec<String>,
    data: Vec<f64>,
}

impl RasterImage {
    /// Build a raster from band-planar data, validating every invariant.
    pub fn new(
        width: usize,
        height: usize,
        band_names: Vec<String>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if band_names.is_empty() {
            return Err(Error::InvalidParameter("raster needs at least one band".into()));
        }
        let expected = width * height * band_names.len();
        if data.len() != expected {
            return Err(Error::DataLengthMismatch { expected, actual: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { width, height, band_names, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.band_names.len()
    }

    pub fn band_names(&self) -> &[String] {
        &self.band_names
    }

    /// Full band-planar data, `bands` planes of `width * height` values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One band plane as a slice.
    pub fn band_plane(&self, band: usize) -> &[f64] {
        let plane = self.width * self.height;
        &self.data[band * plane..(band + 1) * plane]
    }

    /// Index of the band with the given name, if present.
    pub fn band_index(&self, name: &str) -> Option<usize> {
        self.band_names.iter().position(|n| n == name)
    }

    /// Plane of the band with the given name, if present.
    pub fn named_plane(&self, name: &str) -> Option<&[f64]> {
        self.band_index(name).map(|i| self.band_plane(i))
    }

    /// Copy one band plane out as a standalone raster.
    pub fn band(&self, band: usize) -> Band {
        Band {
            width: self.width,
            height: self.height,
            values: self.band_plane(band).to_vec(),
        }
    }

    /// Apply `v -> a*v + c` to every value of every band.
    pub fn affine(&self, a: f64, c: f64) -> Result<Self> {
        let data = self.data.iter().map(|&v| a * v + c).collect();
        Self::new(self.width, self.height, self.band_names.clone(), data)
    }
}

/// Single-band floating-point raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Band {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "band dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(Error::DataLengthMismatch { expected, actual: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Single-band index image with every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "feature map dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(Error::DataLengthMismatch { expected, actual: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "feature map value out of [0,1] at index {index}: {}",
                values[index]
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Collapse a multi-band raster to each pixel's maximal spectral value.
///
/// Buildings tend to be bright in at least one band, so the per-pixel band
/// maximum concentrates building evidence into a single plane.
pub fn enhanced_image(img: &RasterImage) -> Band {
    let plane = img.width * img.height;
    let mut out = img.band_plane(0).to_vec();
    for b in 1..img.bands() {
        let src = img.band_plane(b);
        for i in 0..plane {
            if src[i] > out[i] {
                out[i] = src[i];
            }
        }
    }
    Band { width: img.width, height: img.height, values: out }
}

/// Min-max rescale a band into `[0, 1]`.
///
/// A constant input maps to all zeros: a flat response carries no building
/// evidence, so zero is the meaningful index value.
pub fn normalize_01(band: &Band) -> FeatureMap {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in &band.values {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    let values = if max == min {
        vec![0.0; band.values.len()]
    } else {
        let range = max - min;
        band.values.iter().map(|&v| (v - min) / range).collect()
    };
    FeatureMap { width: band.width, height: band.height, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(width: usize, height: usize, values: Vec<f64>) -> RasterImage {
        RasterImage::new(width, height, vec!["gray".into()], values).unwrap()
    }

    #[test]
    fn construction_rejects_bad_lengths() {
        let err = RasterImage::new(2, 2, vec!["a".into()], vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::DataLengthMismatch { expected: 4, actual: 3 }));
    }

    #[test]
    fn construction_rejects_non_finite() {
        let err = RasterImage::new(2, 1, vec!["a".into()], vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { index: 1 }));
        let err = Band::new(1, 2, vec![f64::INFINITY, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { index: 0 }));
    }

    #[test]
    fn construction_rejects_zero_dims() {
        assert!(RasterImage::new(0, 4, vec!["a".into()], vec![]).is_err());
        assert!(Band::new(3, 0, vec![]).is_err());
    }

    #[test]
    fn feature_map_rejects_out_of_range() {
        assert!(FeatureMap::new(1, 2, vec![0.5, 1.2]).is_err());
        assert!(FeatureMap::new(1, 2, vec![-0.1, 0.0]).is_err());
        assert!(FeatureMap::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn enhanced_takes_per_pixel_band_max() {
        let img = RasterImage::new(
            1,
            1,
            vec!["a".into(), "b".into(), "c".into()],
            vec![10.0, 50.0, 30.0],
        )
        .unwrap();
        assert_eq!(enhanced_image(&img).values(), &[50.0]);
    }

    #[test]
    fn enhanced_of_single_band_is_identity() {
        let img = gray(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(enhanced_image(&img).values(), img.band_plane(0));
    }

    #[test]
    fn enhanced_two_band_example() {
        // band a: [[1,9],[3,4]], band b: [[8,2],[3,7]] -> [[8,9],[3,7]]
        let img = RasterImage::new(
            2,
            2,
            vec!["a".into(), "b".into()],
            vec![1.0, 9.0, 3.0, 4.0, 8.0, 2.0, 3.0, 7.0],
        )
        .unwrap();
        assert_eq!(enhanced_image(&img).values(), &[8.0, 9.0, 3.0, 7.0]);
    }

    #[test]
    fn normalize_rescales_linearly() {
        let band = Band::new(3, 1, vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(normalize_01(&band).values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_is_all_zeros() {
        let band = Band::new(3, 1, vec![5.0, 5.0, 5.0]).unwrap();
        assert_eq!(normalize_01(&band).values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_handles_negative_min() {
        // (v + 1) / 4
        let band = Band::new(3, 1, vec![-1.0, 0.0, 3.0]).unwrap();
        assert_eq!(normalize_01(&band).values(), &[0.0, 0.25, 1.0]);
    }

    proptest! {
        #[test]
        fn enhanced_dominates_every_band(
            vals in proptest::collection::vec(-1e6f64..1e6, 32),
        ) {
            let img = RasterImage::new(
                4, 4,
                vec!["a".into(), "b".into()],
                vals,
            ).unwrap();
            let enh = enhanced_image(&img);
            for b in 0..img.bands() {
                let plane = img.band_plane(b);
                for (e, v) in enh.values().iter().zip(plane) {
                    prop_assert!(e >= v);
                }
            }
        }

        #[test]
        fn normalize_invariant_under_positive_affine(
            vals in proptest::collection::vec(-1e3f64..1e3, 16),
            a in 0.01f64..100.0,
            c in -1e3f64..1e3,
        ) {
            let band = Band::new(4, 4, vals.clone()).unwrap();
            let shifted = Band::new(4, 4, vals.iter().map(|v| a * v + c).collect()).unwrap();
            let base = normalize_01(&band);
            let transformed = normalize_01(&shifted);
            let constant = vals.iter().all(|&v| v == vals[0]);
            prop_assume!(!constant);
            for (x, y) in base.values().iter().zip(transformed.values()) {
                prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
            }
        }

        #[test]
        fn normalize_attains_both_bounds_on_nonconstant(
            vals in proptest::collection::vec(-1e3f64..1e3, 16),
        ) {
            prop_assume!(vals.iter().any(|&v| v != vals[0]));
            let fm = normalize_01(&Band::new(4, 4, vals).unwrap());
            prop_assert!(fm.values().iter().any(|&v| v == 0.0));
            prop_assert!(fm.values().iter().any(|&v| v == 1.0));
        }
    }
}
