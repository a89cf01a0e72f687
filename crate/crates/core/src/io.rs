//! File formats: the flat raster container, portable graymaps/pixmaps,
//! change reports, and truth-label CSVs.
//!
//! The raster container is a one-line text header over raw 32-bit
//! little-endian floats — deliberately minimal, since the pipeline carries
//! no geo-referencing. Graymaps are binary netpbm (P5) at 8 or 16 bits;
//! 16-bit samples are big-endian as netpbm specifies. Every writer/reader
//! pair round-trips bit-exactly, or within the declared quantization for
//! graymaps.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::changegrid::{
    BinaryLabel, ChangeConfig, GridCell, GridChangeMap, Label, Pattern, PixelRect,
};
use crate::error::{Error, Result};
use crate::eval::TruthCell;
use crate::raster::{Band, FeatureMap, RasterImage};
use crate::spectral::BuildingMask;

const RASTER_MAGIC: &str = "raster";
const REPORT_MAGIC: &str = "changegrid v1";

// ---------------------------------------------------------------------------
// Raster container

fn infer_depth(data: &[f64]) -> u8 {
    let integral = |max: f64| data.iter().all(|&v| v >= 0.0 && v <= max && v.fract() == 0.0);
    if integral(255.0) {
        8
    } else if integral(65535.0) {
        16
    } else {
        32
    }
}

/// Write a raster to the flat container format.
pub fn write_raster(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for name in img.band_names() {
        if name.is_empty() || name.contains([',', ' ', '\t', '\n']) {
            return Err(Error::InvalidParameter(format!(
                "band name {name:?} must be non-empty and free of commas and whitespace"
            )));
        }
    }
    let header = format!(
        "{RASTER_MAGIC} width={} height={} bands={} depth={} names={}\n",
        img.width(),
        img.height(),
        img.bands(),
        infer_depth(img.data()),
        img.band_names().join(","),
    );
    let mut bytes = Vec::with_capacity(header.len() + 4 * img.data().len());
    bytes.extend_from_slice(header.as_bytes());
    for &v in img.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a raster from the flat container format.
pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader {
            path: path.into(),
            detail: "no header line".into(),
        })?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| Error::MalformedHeader {
        path: path.into(),
        detail: "header is not UTF-8".into(),
    })?;
    let bad = |detail: &str| Error::MalformedHeader { path: path.into(), detail: detail.into() };

    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(RASTER_MAGIC) {
        return Err(bad("missing raster magic"));
    }
    let (mut width, mut height, mut bands, mut depth, mut names) = (None, None, None, None, None);
    for token in tokens {
        let (key, value) = token.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        match key {
            "width" => width = Some(value.parse::<usize>().map_err(|_| bad("bad width"))?),
            "height" => height = Some(value.parse::<usize>().map_err(|_| bad("bad height"))?),
            "bands" => bands = Some(value.parse::<usize>().map_err(|_| bad("bad bands"))?),
            "depth" => depth = Some(value.parse::<u8>().map_err(|_| bad("bad depth"))?),
            "names" => names = Some(value.split(',').map(str::to_owned).collect::<Vec<_>>()),
            _ => return Err(bad("unknown header field")),
        }
    }
    let width = width.ok_or_else(|| bad("missing width"))?;
    let height = height.ok_or_else(|| bad("missing height"))?;
    let bands = bands.ok_or_else(|| bad("missing bands"))?;
    let depth = depth.ok_or_else(|| bad("missing depth"))?;
    let names = names.ok_or_else(|| bad("missing names"))?;
    if !matches!(depth, 8 | 16 | 32) {
        return Err(bad("depth must be 8, 16 or 32"));
    }
    if names.len() != bands {
        return Err(bad("band name count mismatch"));
    }

    let payload = &bytes[header_end + 1..];
    let expected = 4 * width * height * bands;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.into(),
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(bad("trailing bytes after payload"));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    RasterImage::new(width, height, names, data)
}

// ---------------------------------------------------------------------------
// Portable graymaps

/// Sample depth of a written graymap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrayDepth {
    Bits8,
    Bits16,
}

impl GrayDepth {
    fn max_value(self) -> u32 {
        match self {
            GrayDepth::Bits8 => 255,
            GrayDepth::Bits16 => 65535,
        }
    }
}

/// Quantize a unit-interval value to a level, rounding half up.
fn quantize(v: f64, max_value: u32) -> u32 {
    ((v * max_value as f64 + 0.5).floor() as u32).min(max_value)
}

fn write_pgm(path: &Path, width: usize, height: usize, max_value: u32, levels: &[u32]) -> Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n{max_value}\n").into_bytes();
    if max_value <= 255 {
        bytes.extend(levels.iter().map(|&l| l as u8));
    } else {
        for &l in levels {
            bytes.extend_from_slice(&(l as u16).to_be_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write a feature map as a binary graymap at the given depth.
pub fn write_gray_image(fm: &FeatureMap, path: impl AsRef<Path>, depth: GrayDepth) -> Result<()> {
    let max_value = depth.max_value();
    let levels: Vec<u32> = fm.values().iter().map(|&v| quantize(v, max_value)).collect();
    write_pgm(path.as_ref(), fm.width(), fm.height(), max_value, &levels)
}

struct PgmData {
    width: usize,
    height: usize,
    max_value: u32,
    levels: Vec<u32>,
}

fn read_pgm(path: &Path) -> Result<PgmData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: &str| Error::MalformedHeader { path: path.into(), detail: detail.into() };

    // Header tokens are whitespace-separated; '#' starts a comment to EOL.
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Option<(usize, usize)> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then_some((start, pos))
    };

    let mut take_str = |bytes: &[u8]| -> Result<String> {
        let (s, e) = next_token(bytes).ok_or_else(|| bad("unexpected end of header"))?;
        Ok(String::from_utf8_lossy(&bytes[s..e]).into_owned())
    };
    if take_str(&bytes)? != "P5" {
        return Err(bad("not a binary graymap (P5)"));
    }
    let width: usize = take_str(&bytes)?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = take_str(&bytes)?.parse().map_err(|_| bad("bad height"))?;
    let max_value: u64 = take_str(&bytes)?.parse().map_err(|_| bad("bad max value"))?;
    if max_value == 0 || max_value > 65535 {
        return Err(bad("max value must lie in 1..=65535"));
    }
    let max_value = max_value as u32;
    // Exactly one whitespace byte separates the header from the samples.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing sample separator"));
    }
    pos += 1;

    let payload = &bytes[pos..];
    let sample_bytes = if max_value <= 255 { 1 } else { 2 };
    let expected = width * height * sample_bytes;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.into(),
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(bad("trailing bytes after samples"));
    }
    let levels: Vec<u32> = if sample_bytes == 1 {
        payload.iter().map(|&b| u32::from(b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    };
    if let Some(&l) = levels.iter().find(|&&l| l > max_value) {
        return Err(bad(&format!("sample {l} exceeds max value {max_value}")));
    }
    Ok(PgmData { width, height, max_value, levels })
}

/// Read a binary graymap, scaling levels into `[0, 1]`.
pub fn read_gray_image(path: impl AsRef<Path>) -> Result<Band> {
    let pgm = read_pgm(path.as_ref())?;
    let scale = 1.0 / pgm.max_value as f64;
    let values = pgm.levels.iter().map(|&l| l as f64 * scale).collect();
    Band::new(pgm.width, pgm.height, values)
}

/// Write a building mask as an 8-bit graymap with levels 0 and 255.
pub fn write_mask(mask: &BuildingMask, path: impl AsRef<Path>) -> Result<()> {
    let levels: Vec<u32> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_pgm(path.as_ref(), mask.width(), mask.height(), 255, &levels)
}

/// Read a building mask from a graymap; any nonzero level is building.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BuildingMask> {
    let pgm = read_pgm(path.as_ref())?;
    BuildingMask::new(pgm.width, pgm.height, pgm.levels.iter().map(|&l| l > 0).collect())
}

// ---------------------------------------------------------------------------
// Change maps

/// Painting convention for change-map images.
pub trait ColoredLabel: Label {
    fn color(&self) -> [u8; 3];
    /// Tag naming the alphabet in report files.
    const KIND: &'static str;
}

impl ColoredLabel for Pattern {
    fn color(&self) -> [u8; 3] {
        match self {
            Pattern::Si => [255, 0, 0],
            Pattern::Sd => [0, 255, 0],
            Pattern::Au => [0, 0, 255],
        }
    }
    const KIND: &'static str = "pattern";
}

impl ColoredLabel for BinaryLabel {
    fn color(&self) -> [u8; 3] {
        match self {
            BinaryLabel::Changed => [255, 255, 255],
            BinaryLabel::Unchanged => [128, 128, 128],
        }
    }
    const KIND: &'static str = "binary";
}

/// Write the change map as a binary pixmap, every cell painted solid in its
/// label's color.
pub fn write_change_image<L: ColoredLabel>(
    map: &GridChangeMap<L>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let (width, height) = (map.width(), map.height());
    let mut pixels = vec![0u8; 3 * width * height];
    for cell in map.cells() {
        let [r, g, b] = cell.label.color();
        for y in cell.rect.y0..cell.rect.y1 {
            for x in cell.rect.x0..cell.rect.x1 {
                let at = 3 * (y * width + x);
                pixels[at] = r;
                pixels[at + 1] = g;
                pixels[at + 2] = b;
            }
        }
    }
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(&pixels);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        // {:?} prints the shortest digits that parse back exactly.
        Some(x) => format!("{x:?}"),
        None => "none".into(),
    }
}

/// Write the cell report: config snapshot, then one line per cell.
pub fn write_change_report<L: ColoredLabel>(
    map: &GridChangeMap<L>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let cfg = map.config();
    let mut out = String::new();
    out.push_str(REPORT_MAGIC);
    out.push('\n');
    out.push_str(&format!("kind={}\n", L::KIND));
    out.push_str(&format!(
        "width={} height={} n_segments={}\n",
        map.width(),
        map.height(),
        cfg.n_segments
    ));
    out.push_str(&format!(
        "change_threshold={:?} min_area_floor={} diff_threshold={}\n",
        cfg.change_threshold,
        fmt_opt(cfg.min_area_floor),
        fmt_opt(cfg.diff_threshold),
    ));
    out.push_str(&format!("cells={}\n", map.cells().len()));
    for c in map.cells() {
        out.push_str(&format!(
            "{} {} {},{},{},{} {} {} {}\n",
            c.row, c.col, c.rect.x0, c.rect.y0, c.rect.x1, c.rect.y1, c.a1, c.a2, c.label.code()
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Write both change-map artifacts: the painted image and the cell report.
pub fn write_change_map<L: ColoredLabel>(
    map: &GridChangeMap<L>,
    image_path: impl AsRef<Path>,
    report_path: impl AsRef<Path>,
) -> Result<()> {
    write_change_image(map, image_path)?;
    write_change_report(map, report_path)
}

/// A parsed change report, tagged by its label alphabet.
#[derive(Debug, Clone, PartialEq)]
pub enum ChangeReport {
    Pattern(GridChangeMap<Pattern>),
    Binary(GridChangeMap<BinaryLabel>),
}

fn parse_opt(path: &Path, s: &str) -> Result<Option<f64>> {
    if s == "none" {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| Error::MalformedHeader {
        path: path.into(),
        detail: format!("bad float {s:?}"),
    })
}

fn parse_kv<'a>(path: &Path, token: &'a str, key: &str) -> Result<&'a str> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::MalformedHeader {
            path: path.into(),
            detail: format!("expected {key}=..., found {token:?}"),
        })
}

fn parse_cells<L: Label>(
    path: &Path,
    lines: &[&str],
    width: usize,
    height: usize,
    cfg: ChangeConfig,
) -> Result<GridChangeMap<L>> {
    let bad = |detail: String| Error::MalformedHeader { path: path.into(), detail };
    let mut cells = Vec::with_capacity(lines.len());
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(bad(format!("cell line needs 6 fields: {line:?}")));
        }
        let row = parts[0].parse().map_err(|_| bad(format!("bad row in {line:?}")))?;
        let col = parts[1].parse().map_err(|_| bad(format!("bad col in {line:?}")))?;
        let bounds: Vec<usize> = parts[2]
            .split(',')
            .map(|t| t.parse().map_err(|_| bad(format!("bad rect in {line:?}"))))
            .collect::<Result<_>>()?;
        if bounds.len() != 4 {
            return Err(bad(format!("rect needs 4 bounds: {line:?}")));
        }
        let a1 = parts[3].parse().map_err(|_| bad(format!("bad a1 in {line:?}")))?;
        let a2 = parts[4].parse().map_err(|_| bad(format!("bad a2 in {line:?}")))?;
        let label =
            L::parse(parts[5]).ok_or_else(|| bad(format!("unknown label {:?}", parts[5])))?;
        cells.push(GridCell {
            row,
            col,
            rect: PixelRect { x0: bounds[0], y0: bounds[1], x1: bounds[2], y1: bounds[3] },
            a1,
            a2,
            label,
        });
    }
    GridChangeMap::from_parts(width, height, cfg, cells)
}

/// Parse a change report back into a grid map.
pub fn read_change_report(path: impl AsRef<Path>) -> Result<ChangeReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::MalformedHeader { path: path.into(), detail };
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 5 || lines[0] != REPORT_MAGIC {
        return Err(bad("missing report magic".into()));
    }
    let kind = parse_kv(path, lines[1], "kind")?;

    let dims: Vec<&str> = lines[2].split_whitespace().collect();
    if dims.len() != 3 {
        return Err(bad(format!("bad dimension line {:?}", lines[2])));
    }
    let width: usize =
        parse_kv(path, dims[0], "width")?.parse().map_err(|_| bad("bad width".into()))?;
    let height: usize =
        parse_kv(path, dims[1], "height")?.parse().map_err(|_| bad("bad height".into()))?;
    let n_segments: usize =
        parse_kv(path, dims[2], "n_segments")?.parse().map_err(|_| bad("bad n_segments".into()))?;

    let cfg_parts: Vec<&str> = lines[3].split_whitespace().collect();
    if cfg_parts.len() != 3 {
        return Err(bad(format!("bad config line {:?}", lines[3])));
    }
    let change_threshold: f64 = parse_kv(path, cfg_parts[0], "change_threshold")?
        .parse()
        .map_err(|_| bad("bad change_threshold".into()))?;
    let min_area_floor = parse_opt(path, parse_kv(path, cfg_parts[1], "min_area_floor")?)?;
    let diff_threshold = parse_opt(path, parse_kv(path, cfg_parts[2], "diff_threshold")?)?;
    let cfg = ChangeConfig { n_segments, change_threshold, min_area_floor, diff_threshold };

    let cell_count: usize =
        parse_kv(path, lines[4], "cells")?.parse().map_err(|_| bad("bad cell count".into()))?;
    let cell_lines = &lines[5..];
    if cell_lines.len() != cell_count {
        return Err(bad(format!(
            "expected {cell_count} cell lines, found {}",
            cell_lines.len()
        )));
    }
    match kind {
        "pattern" => Ok(ChangeReport::Pattern(parse_cells(path, cell_lines, width, height, cfg)?)),
        "binary" => Ok(ChangeReport::Binary(parse_cells(path, cell_lines, width, height, cfg)?)),
        other => Err(bad(format!("unknown report kind {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Truth labels

/// Write truth labels as CSV with a header row.
pub fn write_truth_labels<L: Label>(
    cells: &[TruthCell<L>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("row,col,label\n");
    for c in cells {
        out.push_str(&format!("{},{},{}\n", c.row, c.col, c.label.code()));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read truth labels from CSV; the `row,col,label` header is optional.
pub fn read_truth_labels<L: Label>(path: impl AsRef<Path>) -> Result<Vec<TruthCell<L>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::MalformedHeader { path: path.into(), detail };
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "row,col,label") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad(format!("line {}: need row,col,label", i + 1)));
        }
        let row = parts[0].parse().map_err(|_| bad(format!("line {}: bad row", i + 1)))?;
        let col = parts[1].parse().map_err(|_| bad(format!("line {}: bad col", i + 1)))?;
        let label = L::parse(parts[2])
            .ok_or_else(|| bad(format!("line {}: unknown label {:?}", i + 1, parts[2])))?;
        cells.push(TruthCell { row, col, label });
    }
    Ok(cells)
}
