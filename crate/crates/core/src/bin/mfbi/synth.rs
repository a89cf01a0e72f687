//! Seeded synthetic rasters for the benchmark harness.

use mfbi_core::{RasterImage, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Low-amplitude uniform noise plus randomly placed bright rectangles,
/// shared across bands the way roofs are bright in every channel. Structured
/// content makes both indices do representative work instead of filtering
/// pure noise. Values are 8-bit-like integers, matching the digital numbers
/// of real imagery.
pub fn synth_raster(width: usize, height: usize, bands: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane = width * height;
    let mut data = vec![0.0f64; plane * bands];
    for v in data.iter_mut() {
        *v = f64::from(rng.gen_range(0u8..=50));
    }
    let blocks = (plane / 8192).max(4);
    for _ in 0..blocks {
        let bw = rng.gen_range(6..=24).min(width);
        let bh = rng.gen_range(6..=24).min(height);
        let x0 = rng.gen_range(0..=width - bw);
        let y0 = rng.gen_range(0..=height - bh);
        let level = f64::from(rng.gen_range(150u8..=255));
        for band in 0..bands {
            for y in y0..y0 + bh {
                let row = band * plane + y * width;
                data[row + x0..row + x0 + bw].fill(level);
            }
        }
    }
    let names = (0..bands).map(|i| format!("band{i}")).collect();
    RasterImage::new(width, height, names, data)
}
