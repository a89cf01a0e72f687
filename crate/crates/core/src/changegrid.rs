//! Grid partition and per-cell change classification.
//!
//! Both building masks are cut into the same N x N grid; each cell compares
//! its building areas A1 (date 1) and A2 (date 2). The ratio classifier
//! labels cells SI / SD / AU (significantly increased / decreased /
//! approximately unchanged); the difference baseline labels them C / UC
//! from `|A2 - A1|` against a fixed pixel threshold.

use std::fmt;

use crate::error::{Error, Result};
use crate::spectral::BuildingMask;

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// A change label alphabet: the three-pattern set or the binary set.
pub trait Label: Copy + Eq + fmt::Debug + 'static {
    const ALL: &'static [Self];
    fn code(&self) -> &'static str;
    fn parse(s: &str) -> Option<Self>;
    fn index(&self) -> usize {
        Self::ALL.iter().position(|l| l == self).expect("label in alphabet")
    }
}

/// Three-pattern change label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Building area significantly increased.
    Si,
    /// Building area significantly decreased.
    Sd,
    /// Building area approximately unchanged.
    Au,
}

impl Label for Pattern {
    const ALL: &'static [Pattern] = &[Pattern::Si, Pattern::Sd, Pattern::Au];

    fn code(&self) -> &'static str {
        match self {
            Pattern::Si => "SI",
            Pattern::Sd => "SD",
            Pattern::Au => "AU",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "SI" => Some(Pattern::Si),
            "SD" => Some(Pattern::Sd),
            "AU" => Some(Pattern::Au),
            _ => None,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Binary change label of the difference baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryLabel {
    Changed,
    Unchanged,
}

impl Label for BinaryLabel {
    const ALL: &'static [BinaryLabel] = &[BinaryLabel::Changed, BinaryLabel::Unchanged];

    fn code(&self) -> &'static str {
        match self {
            BinaryLabel::Changed => "C",
            BinaryLabel::Unchanged => "UC",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "C" => Some(BinaryLabel::Changed),
            "UC" => Some(BinaryLabel::Unchanged),
            _ => None,
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Grid and classification settings.
///
/// `change_threshold` is the ratio threshold T (> 1). `min_area_floor` is
/// the building-area noise floor in pixels; `None` resolves to 0.5% of the
/// average cell area when a change map is built. `diff_threshold` is only
/// used by the difference baseline and has no claimed default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeConfig {
    pub n_segments: usize,
    pub change_threshold: f64,
    pub min_area_floor: Option<f64>,
    pub diff_threshold: Option<f64>,
}

impl Default for ChangeConfig {
    fn default() -> Self {
        Self { n_segments: 14, change_threshold: 2.5, min_area_floor: None, diff_threshold: None }
    }
}

impl ChangeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 {
            return Err(Error::InvalidParameter("n_segments must be >= 1".into()));
        }
        if !(self.change_threshold > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "change_threshold must exceed 1, got {}",
                self.change_threshold
            )));
        }
        if let Some(f) = self.min_area_floor {
            if !(f >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "min_area_floor must be >= 0, got {f}"
                )));
            }
        }
        if let Some(d) = self.diff_threshold {
            if !(d >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "diff_threshold must be >= 0, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Copy with the noise floor made concrete for the given image size:
    /// an unset floor becomes 0.5% of the average cell area.
    pub fn resolved(&self, width: usize, height: usize) -> Self {
        let cell_area = (width * height) as f64 / (self.n_segments * self.n_segments) as f64;
        Self {
            min_area_floor: Some(self.min_area_floor.unwrap_or(0.005 * cell_area)),
            ..*self
        }
    }
}

/// One grid cell with its building areas and label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell<L: Label> {
    pub row: usize,
    pub col: usize,
    pub rect: PixelRect,
    pub a1: u64,
    pub a2: u64,
    pub label: L,
}

/// The N x N cell grid over an image, with the config that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChangeMap<L: Label> {
    width: usize,
    height: usize,
    config: ChangeConfig,
    cells: Vec<GridCell<L>>,
}

impl<L: Label> GridChangeMap<L> {
    /// Assemble from parts; cells must be the full row-major grid.
    pub fn from_parts(
        width: usize,
        height: usize,
        config: ChangeConfig,
        cells: Vec<GridCell<L>>,
    ) -> Result<Self> {
        config.validate()?;
        let n = config.n_segments;
        if cells.len() != n * n {
            return Err(Error::DataLengthMismatch { expected: n * n, actual: cells.len() });
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.row != i / n || cell.col != i % n {
                return Err(Error::InvalidParameter(format!(
                    "cell {i} is ({}, {}), expected row-major order",
                    cell.row, cell.col
                )));
            }
        }
        Ok(Self { width, height, config, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_segments(&self) -> usize {
        self.config.n_segments
    }

    pub fn config(&self) -> &ChangeConfig {
        &self.config
    }

    pub fn cells(&self) -> &[GridCell<L>] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> &GridCell<L> {
        &self.cells[row * self.config.n_segments + col]
    }
}

fn axis_bounds(extent: usize, n: usize) -> Vec<(usize, usize)> {
    // Equal-length segments; the remainder widens the trailing ones.
    let base = extent / n;
    let rem = extent % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i >= n - rem);
        out.push((start, start + size));
        start += size;
    }
    out
}

/// Cut `width x height` into an `n x n` grid of rects, row-major. Segments
/// on each axis differ in length by at most one pixel and tile exactly.
pub fn partition(width: usize, height: usize, n: usize) -> Result<Vec<PixelRect>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n_segments must be >= 1".into()));
    }
    if n > width {
        return Err(Error::PartitionTooFine { n, extent: width });
    }
    if n > height {
        return Err(Error::PartitionTooFine { n, extent: height });
    }
    let cols = axis_bounds(width, n);
    let rows = axis_bounds(height, n);
    let mut rects = Vec::with_capacity(n * n);
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            rects.push(PixelRect { x0, y0, x1, y1 });
        }
    }
    Ok(rects)
}

/// Classify one cell from its building areas.
///
/// The noise floor comes first: cells whose larger area is within the floor
/// are unchanged; an area at or below the floor against one above it is a
/// significant change regardless of the (possibly undefined) ratio. Above
/// the floor the ratio rules apply, phrased as cross-multiplications so no
/// division occurs; boundary equality with T counts as unchanged.
pub fn classify_cell(a1: f64, a2: f64, cfg: &ChangeConfig) -> Pattern {
    let floor = cfg.min_area_floor.unwrap_or(0.0);
    let t = cfg.change_threshold;
    if a1.max(a2) <= floor {
        Pattern::Au
    } else if a1 <= floor {
        Pattern::Si
    } else if a2 <= floor {
        Pattern::Sd
    } else if a2 > t * a1 {
        Pattern::Si
    } else if t * a2 < a1 {
        Pattern::Sd
    } else {
        Pattern::Au
    }
}

fn check_same_dims(m1: &BuildingMask, m2: &BuildingMask) -> Result<()> {
    if m1.width() != m2.width() || m1.height() != m2.height() {
        return Err(Error::DimensionMismatch {
            expected: (m1.width(), m1.height()),
            actual: (m2.width(), m2.height()),
        });
    }
    Ok(())
}

fn count_cells(
    m1: &BuildingMask,
    m2: &BuildingMask,
    cfg: &ChangeConfig,
) -> Result<Vec<(usize, usize, PixelRect, u64, u64)>> {
    check_same_dims(m1, m2)?;
    cfg.validate()?;
    let n = cfg.n_segments;
    let rects = partition(m1.width(), m1.height(), n)?;
    Ok(rects
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let a1 = m1.count_in_rect(r.x0, r.y0, r.x1, r.y1) as u64;
            let a2 = m2.count_in_rect(r.x0, r.y0, r.x1, r.y1) as u64;
            (i / n, i % n, r, a1, a2)
        })
        .collect())
}

/// Ratio-classified change map. The stored config carries the concrete
/// noise floor actually applied.
pub fn change_map(
    mask_t1: &BuildingMask,
    mask_t2: &BuildingMask,
    cfg: &ChangeConfig,
) -> Result<GridChangeMap<Pattern>> {
    let counted = count_cells(mask_t1, mask_t2, cfg)?;
    let resolved = cfg.resolved(mask_t1.width(), mask_t1.height());
    let cells = counted
        .into_iter()
        .map(|(row, col, rect, a1, a2)| GridCell {
            row,
            col,
            rect,
            a1,
            a2,
            label: classify_cell(a1 as f64, a2 as f64, &resolved),
        })
        .collect();
    GridChangeMap::from_parts(mask_t1.width(), mask_t1.height(), resolved, cells)
}

/// Difference-threshold baseline: changed exactly when `|a2 - a1|` exceeds
/// the configured pixel threshold.
pub fn change_map_diff_baseline(
    mask_t1: &BuildingMask,
    mask_t2: &BuildingMask,
    cfg: &ChangeConfig,
) -> Result<GridChangeMap<BinaryLabel>> {
    let diff_threshold = cfg.diff_threshold.ok_or(Error::MissingDiffThreshold)?;
    let counted = count_cells(mask_t1, mask_t2, cfg)?;
    let cells = counted
        .into_iter()
        .map(|(row, col, rect, a1, a2)| {
            let diff = (a2 as f64 - a1 as f64).abs();
            GridCell {
                row,
                col,
                rect,
                a1,
                a2,
                label: if diff > diff_threshold {
                    BinaryLabel::Changed
                } else {
                    BinaryLabel::Unchanged
                },
            }
        })
        .collect();
    GridChangeMap::from_parts(mask_t1.width(), mask_t1.height(), *cfg, cells)
}
