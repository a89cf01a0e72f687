//! Error type shared across the pipeline.

use std::fmt;
use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by raster construction, filtering, segmentation,
/// change classification and file I/O.
#[derive(Debug)]
pub enum Error {
    /// A constructor or operation received an invalid parameter.
    InvalidParameter(String),
    /// Raster data length does not match width * height * bands.
    DataLengthMismatch { expected: usize, actual: usize },
    /// A pixel value was NaN or infinite at construction time.
    NonFiniteValue { index: usize },
    /// Two rasters that must share dimensions do not.
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    /// Filter window or structuring element does not fit in the image.
    WindowTooLarge { window: usize, width: usize, height: usize },
    /// A required spectral band is missing from the raster.
    MissingBand { band: &'static str },
    /// Otsu input occupies a single histogram bin.
    DegenerateHistogram,
    /// Grid partition requested more segments than pixels on an axis.
    PartitionTooFine { n: usize, extent: usize },
    /// The binary baseline was invoked without a difference threshold.
    MissingDiffThreshold,
    /// Truth labels do not cover every grid cell.
    MissingTruthCells { cells: Vec<(usize, usize)> },
    /// A truth label lies outside the grid or repeats a cell.
    BadTruthCell { row: usize, col: usize, reason: String },
    /// A file had a malformed header.
    MalformedHeader { path: PathBuf, detail: String },
    /// A payload ended before the declared pixel count.
    TruncatedPayload { path: PathBuf, expected: usize, actual: usize },
    /// Underlying I/O failure.
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DataLengthMismatch { expected, actual } => {
                write!(f, "data length mismatch: expected {expected} values, got {actual}")
            }
            Error::NonFiniteValue { index } => {
                write!(f, "non-finite value at data index {index}")
            }
            Error::DimensionMismatch { expected, actual } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, actual.0, actual.1
            ),
            Error::WindowTooLarge { window, width, height } => write!(
                f,
                "window too large: {window} exceeds image extent {width}x{height}"
            ),
            Error::MissingBand { band } => write!(f, "missing required band \"{band}\""),
            Error::DegenerateHistogram => write!(f, "degenerate histogram: single occupied bin"),
            Error::PartitionTooFine { n, extent } => {
                write!(f, "cannot partition extent {extent} into {n} segments")
            }
            Error::MissingDiffThreshold => {
                write!(f, "difference baseline requires diff_threshold")
            }
            Error::MissingTruthCells { cells } => {
                write!(f, "truth labels missing for cells: ")?;
                for (i, (r, c)) in cells.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({r},{c})")?;
                }
                Ok(())
            }
            Error::BadTruthCell { row, col, reason } => {
                write!(f, "bad truth cell ({row},{col}): {reason}")
            }
            Error::MalformedHeader { path, detail } => {
                write!(f, "malformed header in {}: {detail}", path.display())
            }
            Error::TruncatedPayload { path, expected, actual } => write!(
                f,
                "truncated payload in {}: expected {expected} bytes, got {actual}",
                path.display()
            ),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
