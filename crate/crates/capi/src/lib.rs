//! C ABI for the building change detection pipeline.
//!
//! Every object crosses the boundary as an opaque handle created and freed
//! here. Functions return [`MfbiStatus`]; on failure the thread-local
//! message from [`mfbi_last_error`] describes what went wrong. Panics are
//! caught at the boundary and reported as [`MfbiStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mfbi_core::{
    building_mask, change_map, mbi, mfbi, read_mask, read_raster, write_change_map,
    write_gray_image, write_mask, write_raster, BuildingMask, ChangeConfig, Error, FeatureMap,
    GrayDepth, GridChangeMap, MaskParams, MbiParams, Pattern, RasterImage, ScaleProfile,
};

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfbiStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A value failed validation; see `mfbi_last_error`.
    InvalidArgument = 2,
    /// Reading or writing a file failed; see `mfbi_last_error`.
    IoError = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

/// Cell label of a change map.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfbiLabel {
    /// Building area increased between the dates.
    Increased = 0,
    /// Building area decreased.
    Decreased = 1,
    /// Approximately unchanged.
    Unchanged = 2,
}

/// One grid cell of a change map.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MfbiCell {
    pub row: usize,
    pub col: usize,
    /// Pixel bounds, half-open: `x0 <= x < x1`, `y0 <= y < y1`.
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    /// Building pixels inside the cell at the first date.
    pub area_t1: u64,
    /// Building pixels inside the cell at the second date.
    pub area_t2: u64,
    pub label: MfbiLabel,
}

/// Multi-band raster handle.
pub struct MfbiRaster(RasterImage);
/// Building index feature map handle; values lie in `[0, 1]`.
pub struct MfbiFeatureMap(FeatureMap);
/// Binary building mask handle.
pub struct MfbiMask(BuildingMask);
/// Grid change map handle.
pub struct MfbiChangeMap(GridChangeMap<Pattern>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let message = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

fn status_of(err: &Error) -> MfbiStatus {
    match err {
        Error::Io { .. } | Error::MalformedHeader { .. } | Error::TruncatedPayload { .. } => {
            MfbiStatus::IoError
        }
        _ => MfbiStatus::InvalidArgument,
    }
}

fn fail(err: &Error) -> MfbiStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard(f: impl FnOnce() -> MfbiStatus) -> MfbiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            MfbiStatus::Panic
        }
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mfbi_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

macro_rules! not_null {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!(stringify!($ptr), " must not be null"));
            return MfbiStatus::NullArgument;
        }
    };
}

/// # Safety
/// `ptr` must be a valid nul-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, MfbiStatus> {
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(MfbiStatus::InvalidArgument)
        }
    }
}

unsafe fn hand_out<T>(out: *mut *mut T, value: T) -> MfbiStatus {
    *out = Box::into_raw(Box::new(value));
    MfbiStatus::Ok
}

// ---------------------------------------------------------------------------
// Rasters

/// Create a raster from row-major, band-planar samples.
///
/// `band_names` holds `bands` nul-terminated strings; `data` holds
/// `width * height * bands` doubles.
///
/// # Safety
/// All pointers must be valid for the lengths implied by the dimensions.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_new(
    width: usize,
    height: usize,
    bands: usize,
    band_names: *const *const c_char,
    data: *const f64,
    out: *mut *mut MfbiRaster,
) -> MfbiStatus {
    not_null!(band_names);
    not_null!(data);
    not_null!(out);
    guard(|| {
        let mut names = Vec::with_capacity(bands);
        for i in 0..bands {
            let name = *band_names.add(i);
            if name.is_null() {
                set_error("band name must not be null");
                return MfbiStatus::NullArgument;
            }
            match CStr::from_ptr(name).to_str() {
                Ok(s) => names.push(s.to_owned()),
                Err(_) => {
                    set_error("band name is not valid UTF-8");
                    return MfbiStatus::InvalidArgument;
                }
            }
        }
        let samples = std::slice::from_raw_parts(data, width * height * bands);
        match RasterImage::new(width, height, names, samples.to_vec()) {
            Ok(img) => hand_out(out, MfbiRaster(img)),
            Err(e) => fail(&e),
        }
    })
}

/// Read a raster from the flat container format.
///
/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_read(
    path: *const c_char,
    out: *mut *mut MfbiRaster,
) -> MfbiStatus {
    not_null!(path);
    not_null!(out);
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_raster(&path) {
            Ok(img) => hand_out(out, MfbiRaster(img)),
            Err(e) => fail(&e),
        }
    })
}

/// Write a raster to the flat container format.
///
/// # Safety
/// `raster` must be a live handle; `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_write(
    raster: *const MfbiRaster,
    path: *const c_char,
) -> MfbiStatus {
    not_null!(raster);
    not_null!(path);
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_raster(&(*raster).0, &path) {
            Ok(()) => MfbiStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `raster` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_width(raster: *const MfbiRaster) -> usize {
    if raster.is_null() { 0 } else { (*raster).0.width() }
}

/// # Safety
/// `raster` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_height(raster: *const MfbiRaster) -> usize {
    if raster.is_null() { 0 } else { (*raster).0.height() }
}

/// # Safety
/// `raster` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_bands(raster: *const MfbiRaster) -> usize {
    if raster.is_null() { 0 } else { (*raster).0.bands() }
}

/// # Safety
/// `raster` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfbi_raster_free(raster: *mut MfbiRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

// ---------------------------------------------------------------------------
// Feature maps

/// Compute the multi-scale median-filter building index.
///
/// # Safety
/// `raster` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_compute_mfbi(
    raster: *const MfbiRaster,
    initial_window: usize,
    scale_factor: usize,
    num_scales: usize,
    out: *mut *mut MfbiFeatureMap,
) -> MfbiStatus {
    not_null!(raster);
    not_null!(out);
    guard(|| {
        let profile = match ScaleProfile::new(initial_window, scale_factor, num_scales) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match mfbi(&(*raster).0, &profile) {
            Ok(fm) => hand_out(out, MfbiFeatureMap(fm)),
            Err(e) => fail(&e),
        }
    })
}

/// Compute the morphological building index baseline.
///
/// # Safety
/// `raster` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_compute_mbi(
    raster: *const MfbiRaster,
    directions: usize,
    scale_min: usize,
    scale_max: usize,
    scale_step: usize,
    out: *mut *mut MfbiFeatureMap,
) -> MfbiStatus {
    not_null!(raster);
    not_null!(out);
    guard(|| {
        let params = match MbiParams::new(directions, scale_min, scale_max, scale_step) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match mbi(&(*raster).0, &params) {
            Ok(fm) => hand_out(out, MfbiFeatureMap(fm)),
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_feature_map_width(map: *const MfbiFeatureMap) -> usize {
    if map.is_null() { 0 } else { (*map).0.width() }
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_feature_map_height(map: *const MfbiFeatureMap) -> usize {
    if map.is_null() { 0 } else { (*map).0.height() }
}

/// Borrow the row-major values; valid while the handle lives.
///
/// # Safety
/// All pointers must be valid; the view must not outlive `map`.
#[no_mangle]
pub unsafe extern "C" fn mfbi_feature_map_values(
    map: *const MfbiFeatureMap,
    values: *mut *const f64,
    len: *mut usize,
) -> MfbiStatus {
    not_null!(map);
    not_null!(values);
    not_null!(len);
    let slice = (*map).0.values();
    *values = slice.as_ptr();
    *len = slice.len();
    MfbiStatus::Ok
}

/// Write the feature map as a graymap; `bits` selects 8 or 16.
///
/// # Safety
/// `map` must be a live handle; `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfbi_feature_map_write(
    map: *const MfbiFeatureMap,
    path: *const c_char,
    bits: u32,
) -> MfbiStatus {
    not_null!(map);
    not_null!(path);
    guard(|| {
        let depth = match bits {
            8 => GrayDepth::Bits8,
            16 => GrayDepth::Bits16,
            other => {
                set_error(&format!("bits must be 8 or 16, got {other}"));
                return MfbiStatus::InvalidArgument;
            }
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_gray_image(&(*map).0, &path, depth) {
            Ok(()) => MfbiStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `map` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfbi_feature_map_free(map: *mut MfbiFeatureMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

// ---------------------------------------------------------------------------
// Masks

/// Segment a building mask from a feature map and its source raster.
///
/// `otsu_threshold` receives the threshold actually used, or NaN when the
/// histogram was degenerate; pass null to discard it.
///
/// # Safety
/// `map` and `raster` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_building_mask(
    map: *const MfbiFeatureMap,
    raster: *const MfbiRaster,
    ndvi_threshold: f64,
    ndwi_threshold: f64,
    histogram_bins: usize,
    out: *mut *mut MfbiMask,
    otsu_threshold: *mut f64,
) -> MfbiStatus {
    not_null!(map);
    not_null!(raster);
    not_null!(out);
    guard(|| {
        let params = MaskParams { ndvi_threshold, ndwi_threshold, histogram_bins };
        match building_mask(&(*map).0, &(*raster).0, &params) {
            Ok(outcome) => {
                if !otsu_threshold.is_null() {
                    *otsu_threshold = outcome.otsu_threshold.unwrap_or(f64::NAN);
                }
                hand_out(out, MfbiMask(outcome.mask))
            }
            Err(e) => fail(&e),
        }
    })
}

/// Read a mask from a graymap; any nonzero level is building.
///
/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_mask_read(
    path: *const c_char,
    out: *mut *mut MfbiMask,
) -> MfbiStatus {
    not_null!(path);
    not_null!(out);
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_mask(&path) {
            Ok(mask) => hand_out(out, MfbiMask(mask)),
            Err(e) => fail(&e),
        }
    })
}

/// Write a mask as an 8-bit graymap with levels 0 and 255.
///
/// # Safety
/// `mask` must be a live handle; `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfbi_mask_write(
    mask: *const MfbiMask,
    path: *const c_char,
) -> MfbiStatus {
    not_null!(mask);
    not_null!(path);
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_mask(&(*mask).0, &path) {
            Ok(()) => MfbiStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Number of building pixels in the mask.
///
/// # Safety
/// `mask` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_mask_count(mask: *const MfbiMask) -> u64 {
    if mask.is_null() { 0 } else { (*mask).0.count_ones() as u64 }
}

/// # Safety
/// `mask` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfbi_mask_free(mask: *mut MfbiMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

// ---------------------------------------------------------------------------
// Change maps

/// Grid two masks and classify every cell by its building-area ratio.
///
/// Pass a negative `min_area_floor` to use the automatic noise floor
/// (0.5% of the mean cell area).
///
/// # Safety
/// `t1` and `t2` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_change_map_compute(
    t1: *const MfbiMask,
    t2: *const MfbiMask,
    n_segments: usize,
    change_threshold: f64,
    min_area_floor: f64,
    out: *mut *mut MfbiChangeMap,
) -> MfbiStatus {
    not_null!(t1);
    not_null!(t2);
    not_null!(out);
    guard(|| {
        let cfg = ChangeConfig {
            n_segments,
            change_threshold,
            min_area_floor: (min_area_floor >= 0.0).then_some(min_area_floor),
            diff_threshold: None,
        };
        match change_map(&(*t1).0, &(*t2).0, &cfg) {
            Ok(map) => hand_out(out, MfbiChangeMap(map)),
            Err(e) => fail(&e),
        }
    })
}

/// Number of cells in the change map.
///
/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfbi_change_map_cells(map: *const MfbiChangeMap) -> usize {
    if map.is_null() { 0 } else { (*map).0.cells().len() }
}

/// Copy out one cell, row-major order.
///
/// # Safety
/// `map` must be a live handle; `cell` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfbi_change_map_cell(
    map: *const MfbiChangeMap,
    index: usize,
    cell: *mut MfbiCell,
) -> MfbiStatus {
    not_null!(map);
    not_null!(cell);
    let cells = (*map).0.cells();
    let Some(c) = cells.get(index) else {
        set_error(&format!("cell index {index} out of range for {} cells", cells.len()));
        return MfbiStatus::InvalidArgument;
    };
    *cell = MfbiCell {
        row: c.row,
        col: c.col,
        x0: c.rect.x0,
        y0: c.rect.y0,
        x1: c.rect.x1,
        y1: c.rect.y1,
        area_t1: c.a1,
        area_t2: c.a2,
        label: match c.label {
            Pattern::Si => MfbiLabel::Increased,
            Pattern::Sd => MfbiLabel::Decreased,
            Pattern::Au => MfbiLabel::Unchanged,
        },
    };
    MfbiStatus::Ok
}

/// Write the painted change image and the cell report.
///
/// # Safety
/// `map` must be a live handle; paths must be valid nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mfbi_change_map_write(
    map: *const MfbiChangeMap,
    image_path: *const c_char,
    report_path: *const c_char,
) -> MfbiStatus {
    not_null!(map);
    not_null!(image_path);
    not_null!(report_path);
    guard(|| {
        let image_path = match path_arg(image_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let report_path = match path_arg(report_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_change_map(&(*map).0, &image_path, &report_path) {
            Ok(()) => MfbiStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `map` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfbi_change_map_free(map: *mut MfbiChangeMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}
