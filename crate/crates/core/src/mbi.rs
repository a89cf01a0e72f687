//! Morphological building index (MBI) baseline.
//!
//! Feature images are directional means of white top-hats with linear
//! structuring elements; consecutive-scale absolute differentials are
//! averaged and normalized. Deliberately independent of the median-filter
//! index: differentials here use absolute values, and the morphology is the
//! conventional per-pixel scan, not a running-extremum scheme.
//!
//! Border policy: structuring elements shrink to their in-image part. This
//! keeps opening a true algebraic opening — increasing, anti-extensive and
//! bit-exactly idempotent — which clamped-index erode/dilate composition is
//! not (diagonal elements can overshoot at corners).

use crate::error::{Error, Result};
use crate::raster::{enhanced_image, normalize_01, Band, FeatureMap, RasterImage};

/// The four canonical linear structuring directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// 0 deg — horizontal.
    D0,
    /// 45 deg — up-right diagonal (y grows downward).
    D45,
    /// 90 deg — vertical.
    D90,
    /// 135 deg — down-right diagonal.
    D135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::D0, Direction::D45, Direction::D90, Direction::D135];

    pub fn angle_degrees(self) -> f64 {
        match self {
            Direction::D0 => 0.0,
            Direction::D45 => 45.0,
            Direction::D90 => 90.0,
            Direction::D135 => 135.0,
        }
    }
}

/// Scale and direction schedule for the index.
///
/// `directions` is a count: angles are spaced evenly over the half-turn,
/// so the default 4 yields 0, 45, 90 and 135 degrees. The default scale
/// range 3..=24 step 5 gives element lengths 3, 8, 13, 18, 23 — five
/// feature images and four differentials, spanning the same extent as the
/// default median-filter profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MbiParams {
    pub directions: usize,
    pub scale_min: usize,
    pub scale_max: usize,
    pub scale_step: usize,
}

impl Default for MbiParams {
    fn default() -> Self {
        Self { directions: 4, scale_min: 3, scale_max: 24, scale_step: 5 }
    }
}

impl MbiParams {
    pub fn new(directions: usize, scale_min: usize, scale_max: usize, scale_step: usize) -> Result<Self> {
        let params = Self { directions, scale_min, scale_max, scale_step };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions == 0 {
            return Err(Error::InvalidParameter("directions must be >= 1".into()));
        }
        if self.scale_min == 0 || self.scale_step == 0 {
            return Err(Error::InvalidParameter(
                "scale_min and scale_step must be >= 1".into(),
            ));
        }
        if self.scale_min > self.scale_max {
            return Err(Error::InvalidParameter(format!(
                "scale_min {} exceeds scale_max {}",
                self.scale_min, self.scale_max
            )));
        }
        Ok(())
    }

    /// Structuring-element lengths, smallest first.
    pub fn scales(&self) -> Vec<usize> {
        (self.scale_min..=self.scale_max).step_by(self.scale_step).collect()
    }

    /// Evenly spaced angles over the half-turn, in radians.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.directions)
            .map(|j| j as f64 * std::f64::consts::PI / self.directions as f64)
            .collect()
    }
}

/// Pixel offsets of a digital line segment of `length` pixels through the
/// origin at `angle` radians (y grows downward). The dominant axis steps by
/// one per sample — Bresenham discretization — with the same lower-center
/// anchoring as the median windows: steps span `[-(length-1)/2, length/2]`.
fn line_offsets(length: usize, angle: f64) -> Vec<(isize, isize)> {
    let (a, b) = (((length - 1) / 2) as isize, (length / 2) as isize);
    let (dx, dy) = (angle.cos(), -angle.sin());
    (-a..=b)
        .map(|t| {
            if dx.abs() >= dy.abs() {
                (t, (t as f64 * dy / dx).round() as isize)
            } else {
                ((t as f64 * dx / dy).round() as isize, t)
            }
        })
        .collect()
}

fn offsets_for(length: usize, direction: Direction) -> Vec<(isize, isize)> {
    line_offsets(length, direction.angle_degrees().to_radians())
}

fn check_fits(offsets: &[(isize, isize)], length: usize, width: usize, height: usize) -> Result<()> {
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0isize, 0isize, 0isize, 0isize);
    for &(dx, dy) in offsets {
        min_x = min_x.min(dx);
        max_x = max_x.max(dx);
        min_y = min_y.min(dy);
        max_y = max_y.max(dy);
    }
    let span_x = (max_x - min_x + 1) as usize;
    let span_y = (max_y - min_y + 1) as usize;
    if span_x > width || span_y > height {
        return Err(Error::WindowTooLarge { window: length, width, height });
    }
    Ok(())
}

/// Erosion with the in-image part of the element: min over present samples.
fn erode(values: &[f64], width: usize, height: usize, offsets: &[(isize, isize)]) -> Vec<f64> {
    extremum(values, width, height, offsets, 1, f64::min)
}

/// Dilation mirrors the element (`p - u`), min/max otherwise symmetric.
fn dilate(values: &[f64], width: usize, height: usize, offsets: &[(isize, isize)]) -> Vec<f64> {
    extremum(values, width, height, offsets, -1, f64::max)
}

fn extremum(
    values: &[f64],
    width: usize,
    height: usize,
    offsets: &[(isize, isize)],
    sign: isize,
    pick: fn(f64, f64) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            // The zero offset is always present, so the fold is never empty.
            let mut m = values[y * width + x];
            for &(dx, dy) in offsets {
                let nx = x as isize + sign * dx;
                let ny = y as isize + sign * dy;
                if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                    m = pick(m, values[ny as usize * width + nx as usize]);
                }
            }
            out[y * width + x] = m;
        }
    }
    out
}

fn opening(values: &[f64], width: usize, height: usize, offsets: &[(isize, isize)]) -> Vec<f64> {
    let eroded = erode(values, width, height, offsets);
    dilate(&eroded, width, height, offsets)
}

/// White top-hat with a linear structuring element: the band minus its
/// opening. Responds to bright structures narrower than the element;
/// non-negative everywhere.
pub fn white_top_hat_linear(band: &Band, length: usize, direction: Direction) -> Result<Band> {
    if length == 0 {
        return Err(Error::InvalidParameter("element length must be >= 1".into()));
    }
    let offsets = offsets_for(length, direction);
    check_fits(&offsets, length, band.width(), band.height())?;
    let opened = opening(band.values(), band.width(), band.height(), &offsets);
    let values = band.values().iter().zip(&opened).map(|(f, o)| f - o).collect();
    Band::new(band.width(), band.height(), values)
}

/// Morphological building index of a multi-band image.
pub fn mbi(img: &RasterImage, params: &MbiParams) -> Result<FeatureMap> {
    let enhanced = enhanced_image(img);
    mbi_from_band(&enhanced, params)
}

/// MBI of an already-collapsed single band: per scale, the directional mean
/// of white top-hats; consecutive scales differenced absolutely, averaged,
/// normalized into `[0, 1]`.
pub fn mbi_from_band(band: &Band, params: &MbiParams) -> Result<FeatureMap> {
    params.validate()?;
    let scales = params.scales();
    if scales.len() < 2 {
        return Err(Error::InvalidParameter(
            "scale range must contain at least two lengths".into(),
        ));
    }
    let (width, height) = (band.width(), band.height());
    let n = width * height;
    let dir_inv = 1.0 / params.directions as f64;

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(scales.len());
    for &length in &scales {
        let mut acc = vec![0.0f64; n];
        for &angle in &params.angles() {
            let offsets = line_offsets(length, angle);
            check_fits(&offsets, length, width, height)?;
            let opened = opening(band.values(), width, height, &offsets);
            for ((a, f), o) in acc.iter_mut().zip(band.values()).zip(&opened) {
                *a += f - o;
            }
        }
        for a in &mut acc {
            *a *= dir_inv;
        }
        features.push(acc);
    }

    let diff_inv = 1.0 / (features.len() - 1) as f64;
    let mut mean = vec![0.0f64; n];
    for pair in features.windows(2) {
        for ((m, a), b) in mean.iter_mut().zip(&pair[0]).zip(&pair[1]) {
            *m += (b - a).abs();
        }
    }
    for m in &mut mean {
        *m *= diff_inv;
    }
    Ok(normalize_01(&Band::new(width, height, mean)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{mfbi_from_band, ScaleProfile};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct-definition reference: opening at p is the largest of the
    /// in-image element placements covering p, each scored by its minimum.
    /// No erode/dilate intermediates, so it exercises the composition
    /// independently.
    fn opening_oracle(
        values: &[f64],
        width: usize,
        height: usize,
        offsets: &[(isize, isize)],
    ) -> Vec<f64> {
        let in_image = |x: isize, y: isize| {
            x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height
        };
        let mut out = vec![0.0; width * height];
        for y in 0..height {
            for x in 0..width {
                let mut best = f64::NEG_INFINITY;
                for &(ux, uy) in offsets {
                    let (qx, qy) = (x as isize - ux, y as isize - uy);
                    if !in_image(qx, qy) {
                        continue;
                    }
                    let mut low = f64::INFINITY;
                    for &(vx, vy) in offsets {
                        let (rx, ry) = (qx + vx, qy + vy);
                        if in_image(rx, ry) {
                            low = low.min(values[ry as usize * width + rx as usize]);
                        }
                    }
                    best = best.max(low);
                }
                out[y * width + x] = best;
            }
        }
        out
    }

    fn random_band(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Band {
        let values = (0..width * height).map(|_| rng.gen_range(0..100) as f64).collect();
        Band::new(width, height, values).unwrap()
    }

    #[test]
    fn default_scales_and_angles() {
        let p = MbiParams::default();
        assert_eq!(p.scales(), vec![3, 8, 13, 18, 23]);
        let degrees: Vec<f64> = p.angles().iter().map(|a| a.to_degrees()).collect();
        assert_eq!(degrees, vec![0.0, 45.0, 90.0, 135.0]);
    }

    #[test]
    fn params_reject_bad_fields() {
        assert!(MbiParams::new(0, 3, 24, 5).is_err());
        assert!(MbiParams::new(4, 0, 24, 5).is_err());
        assert!(MbiParams::new(4, 25, 24, 5).is_err());
        assert!(MbiParams::new(4, 3, 24, 0).is_err());
    }

    #[test]
    fn canonical_direction_offsets() {
        assert_eq!(offsets_for(3, Direction::D0), vec![(-1, 0), (0, 0), (1, 0)]);
        assert_eq!(offsets_for(3, Direction::D45), vec![(-1, 1), (0, 0), (1, -1)]);
        assert_eq!(offsets_for(3, Direction::D90), vec![(0, -1), (0, 0), (0, 1)]);
        assert_eq!(offsets_for(3, Direction::D135), vec![(-1, -1), (0, 0), (1, 1)]);
    }

    #[test]
    fn even_length_extends_toward_positive_steps() {
        assert_eq!(offsets_for(2, Direction::D0), vec![(0, 0), (1, 0)]);
        assert_eq!(offsets_for(4, Direction::D90), vec![(0, -1), (0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn top_hat_of_constant_is_zero() {
        let band = Band::new(6, 6, vec![4.0; 36]).unwrap();
        for dir in Direction::ALL {
            let th = white_top_hat_linear(&band, 3, dir).unwrap();
            assert!(th.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn top_hat_isolates_narrow_peak() {
        let band = Band::new(7, 1, vec![0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0]).unwrap();
        let th = white_top_hat_linear(&band, 3, Direction::D0).unwrap();
        assert_eq!(th.get(3, 0), 9.0);
    }

    #[test]
    fn top_hat_vanishes_along_a_long_line()
    {
        // A full-width bright line survives opening in its own direction.
        let mut values = vec![0.0; 16 * 9];
        for x in 0..16 {
            values[4 * 16 + x] = 50.0;
        }
        let band = Band::new(16, 9, values).unwrap();
        let th = white_top_hat_linear(&band, 5, Direction::D0).unwrap();
        for x in 0..16 {
            assert_eq!(th.get(x, 4), 0.0);
        }
        // Across the line the element does not fit: full response.
        let th = white_top_hat_linear(&band, 5, Direction::D90).unwrap();
        for x in 0..16 {
            assert_eq!(th.get(x, 4), 50.0);
        }
    }

    #[test]
    fn top_hat_rejects_oversized_element() {
        let band = Band::new(4, 4, vec![0.0; 16]).unwrap();
        assert!(matches!(
            white_top_hat_linear(&band, 5, Direction::D0),
            Err(Error::WindowTooLarge { .. })
        ));
        // A length-4 diagonal spans 4 pixels on both axes and still fits.
        assert!(white_top_hat_linear(&band, 4, Direction::D45).is_ok());
    }

    #[test]
    fn opening_matches_direct_definition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let band = random_band(&mut rng, 12, 9);
            for dir in Direction::ALL {
                for len in [2, 3, 5, 8] {
                    let offsets = offsets_for(len, dir);
                    let got = opening(band.values(), 12, 9, &offsets);
                    let want = opening_oracle(band.values(), 12, 9, &offsets);
                    assert_eq!(got, want, "dir {dir:?} len {len}");
                }
            }
        }
    }

    #[test]
    fn mbi_of_constant_image_is_zero() {
        let img = RasterImage::new(32, 32, vec!["g".into()], vec![3.0; 1024]).unwrap();
        let fm = mbi(&img, &MbiParams::default()).unwrap();
        assert!(fm.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mbi_requires_two_scales() {
        let band = Band::new(32, 32, vec![0.0; 1024]).unwrap();
        let params = MbiParams { directions: 4, scale_min: 3, scale_max: 7, scale_step: 5 };
        assert!(mbi_from_band(&band, &params).is_err());
    }

    #[test]
    fn mbi_is_high_inside_isolated_block() {
        let mut values = vec![0.0; 64 * 64];
        for y in 28..36 {
            for x in 28..36 {
                values[y * 64 + x] = 100.0;
            }
        }
        let band = Band::new(64, 64, values).unwrap();
        let fm = mbi_from_band(&band, &MbiParams::default()).unwrap();
        assert!(fm.get(31, 31) >= 0.9, "center {}", fm.get(31, 31));
        assert_eq!(fm.get(5, 5), 0.0);
        assert_eq!(fm.get(60, 60), 0.0);
    }

    /// A thick full-width line is retained by the along-line opening, which
    /// drags its directional-mean response below the block-driven maximum;
    /// the median profile flattens line and block alike, so its normalized
    /// response on the line stays at the top of the scale.
    #[test]
    fn line_response_is_weaker_than_median_index() {
        let mut values = vec![0.0; 64 * 64];
        for y in 30..34 {
            for x in 0..64 {
                values[y * 64 + x] = 100.0;
            }
        }
        for y in 8..18 {
            for x in 8..18 {
                values[y * 64 + x] = 100.0;
            }
        }
        let band = Band::new(64, 64, values).unwrap();
        let morph = mbi_from_band(&band, &MbiParams::default()).unwrap();
        let median = mfbi_from_band(&band, &ScaleProfile::default()).unwrap();
        let line_mean = |fm: &FeatureMap| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for y in 31..33 {
                for x in 20..44 {
                    sum += fm.get(x, y);
                    count += 1;
                }
            }
            sum / count as f64
        };
        let (morph_line, median_line) = (line_mean(&morph), line_mean(&median));
        assert!(
            morph_line + 0.1 < median_line,
            "morphological {morph_line} vs median {median_line}"
        );
    }

    proptest! {
        #[test]
        fn top_hat_is_nonnegative(
            vals in proptest::collection::vec(0.0f64..100.0, 8 * 8),
            len in 2usize..=6,
            dir_idx in 0usize..4,
        ) {
            let band = Band::new(8, 8, vals).unwrap();
            let th = white_top_hat_linear(&band, len, Direction::ALL[dir_idx]).unwrap();
            for &v in th.values() {
                prop_assert!(v >= 0.0);
            }
        }

        #[test]
        fn opening_is_idempotent(
            vals in proptest::collection::vec(0.0f64..100.0, 9 * 7),
            len in 2usize..=6,
            dir_idx in 0usize..4,
        ) {
            let offsets = offsets_for(len, Direction::ALL[dir_idx]);
            let once = opening(&vals, 9, 7, &offsets);
            let twice = opening(&once, 9, 7, &offsets);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn opening_is_increasing(
            vals in proptest::collection::vec(0.0f64..100.0, 8 * 8),
            bump in proptest::collection::vec(0.0f64..50.0, 8 * 8),
            len in 2usize..=6,
            dir_idx in 0usize..4,
        ) {
            let raised: Vec<f64> = vals.iter().zip(&bump).map(|(v, d)| v + d).collect();
            let offsets = offsets_for(len, Direction::ALL[dir_idx]);
            let low = opening(&vals, 8, 8, &offsets);
            let high = opening(&raised, 8, 8, &offsets);
            for (a, b) in low.iter().zip(&high) {
                prop_assert!(a <= b);
            }
        }
    }
}
