/* C API for the mfbi building change detection pipeline. */

#ifndef MFBI_H
#define MFBI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Cell label of a change map.
typedef enum MfbiLabel {
  // Building area increased between the dates.
  MFBI_LABEL_INCREASED = 0,
  // Building area decreased.
  MFBI_LABEL_DECREASED = 1,
  // Approximately unchanged.
  MFBI_LABEL_UNCHANGED = 2,
} MfbiLabel;

// Result code of every API call.
typedef enum MfbiStatus {
  MFBI_STATUS_OK = 0,
  // A required pointer argument was null.
  MFBI_STATUS_NULL_ARGUMENT = 1,
  // A value failed validation; see `mfbi_last_error`.
  MFBI_STATUS_INVALID_ARGUMENT = 2,
  // Reading or writing a file failed; see `mfbi_last_error`.
  MFBI_STATUS_IO_ERROR = 3,
  // An internal panic was caught at the boundary.
  MFBI_STATUS_PANIC = 4,
} MfbiStatus;

// Grid change map handle.
typedef struct MfbiChangeMap MfbiChangeMap;

// Building index feature map handle; values lie in `[0, 1]`.
typedef struct MfbiFeatureMap MfbiFeatureMap;

// Binary building mask handle.
typedef struct MfbiMask MfbiMask;

// Multi-band raster handle.
typedef struct MfbiRaster MfbiRaster;

// One grid cell of a change map.
typedef struct MfbiCell {
  uintptr_t row;
  uintptr_t col;
  // Pixel bounds, half-open: `x0 <= x < x1`, `y0 <= y < y1`.
  uintptr_t x0;
  uintptr_t y0;
  uintptr_t x1;
  uintptr_t y1;
  // Building pixels inside the cell at the first date.
  uint64_t area_t1;
  // Building pixels inside the cell at the second date.
  uint64_t area_t2;
  enum MfbiLabel label;
} MfbiCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *mfbi_last_error(void);

// Create a raster from row-major, band-planar samples.
//
// `band_names` holds `bands` nul-terminated strings; `data` holds
// `width * height * bands` doubles.
//
// # Safety
// All pointers must be valid for the lengths implied by the dimensions.
enum MfbiStatus mfbi_raster_new(uintptr_t width,
                                uintptr_t height,
                                uintptr_t bands,
                                const char *const *band_names,
                                const double *data,
                                struct MfbiRaster **out);

// Read a raster from the flat container format.
//
// # Safety
// `path` must be a valid nul-terminated string; `out` must be valid.
enum MfbiStatus mfbi_raster_read(const char *path, struct MfbiRaster **out);

// Write a raster to the flat container format.
//
// # Safety
// `raster` must be a live handle; `path` a valid nul-terminated string.
enum MfbiStatus mfbi_raster_write(const struct MfbiRaster *raster, const char *path);

// # Safety
// `raster` must be a live handle.
uintptr_t mfbi_raster_width(const struct MfbiRaster *raster);

// # Safety
// `raster` must be a live handle.
uintptr_t mfbi_raster_height(const struct MfbiRaster *raster);

// # Safety
// `raster` must be a live handle.
uintptr_t mfbi_raster_bands(const struct MfbiRaster *raster);

// # Safety
// `raster` must come from this library and not be freed twice.
void mfbi_raster_free(struct MfbiRaster *raster);

// Compute the multi-scale median-filter building index.
//
// # Safety
// `raster` must be a live handle; `out` must be valid.
enum MfbiStatus mfbi_compute_mfbi(const struct MfbiRaster *raster,
                                  uintptr_t initial_window,
                                  uintptr_t scale_factor,
                                  uintptr_t num_scales,
                                  struct MfbiFeatureMap **out);

// Compute the morphological building index baseline.
//
// # Safety
// `raster` must be a live handle; `out` must be valid.
enum MfbiStatus mfbi_compute_mbi(const struct MfbiRaster *raster,
                                 uintptr_t directions,
                                 uintptr_t scale_min,
                                 uintptr_t scale_max,
                                 uintptr_t scale_step,
                                 struct MfbiFeatureMap **out);

// # Safety
// `map` must be a live handle.
uintptr_t mfbi_feature_map_width(const struct MfbiFeatureMap *map);

// # Safety
// `map` must be a live handle.
uintptr_t mfbi_feature_map_height(const struct MfbiFeatureMap *map);

// Borrow the row-major values; valid while the handle lives.
//
// # Safety
// All pointers must be valid; the view must not outlive `map`.
enum MfbiStatus mfbi_feature_map_values(const struct MfbiFeatureMap *map,
                                        const double **values,
                                        uintptr_t *len);

// Write the feature map as a graymap; `bits` selects 8 or 16.
//
// # Safety
// `map` must be a live handle; `path` a valid nul-terminated string.
enum MfbiStatus mfbi_feature_map_write(const struct MfbiFeatureMap *map,
                                       const char *path,
                                       uint32_t bits);

// # Safety
// `map` must come from this library and not be freed twice.
void mfbi_feature_map_free(struct MfbiFeatureMap *map);

// Segment a building mask from a feature map and its source raster.
//
// `otsu_threshold` receives the threshold actually used, or NaN when the
// histogram was degenerate; pass null to discard it.
//
// # Safety
// `map` and `raster` must be live handles; `out` must be valid.
enum MfbiStatus mfbi_building_mask(const struct MfbiFeatureMap *map,
                                   const struct MfbiRaster *raster,
                                   double ndvi_threshold,
                                   double ndwi_threshold,
                                   uintptr_t histogram_bins,
                                   struct MfbiMask **out,
                                   double *otsu_threshold);

// Read a mask from a graymap; any nonzero level is building.
//
// # Safety
// `path` must be a valid nul-terminated string; `out` must be valid.
enum MfbiStatus mfbi_mask_read(const char *path, struct MfbiMask **out);

// Write a mask as an 8-bit graymap with levels 0 and 255.
//
// # Safety
// `mask` must be a live handle; `path` a valid nul-terminated string.
enum MfbiStatus mfbi_mask_write(const struct MfbiMask *mask, const char *path);

// Number of building pixels in the mask.
//
// # Safety
// `mask` must be a live handle.
uint64_t mfbi_mask_count(const struct MfbiMask *mask);

// # Safety
// `mask` must come from this library and not be freed twice.
void mfbi_mask_free(struct MfbiMask *mask);

// Grid two masks and classify every cell by its building-area ratio.
//
// Pass a negative `min_area_floor` to use the automatic noise floor
// (0.5% of the mean cell area).
//
// # Safety
// `t1` and `t2` must be live handles; `out` must be valid.
enum MfbiStatus mfbi_change_map_compute(const struct MfbiMask *t1,
                                        const struct MfbiMask *t2,
                                        uintptr_t n_segments,
                                        double change_threshold,
                                        double min_area_floor,
                                        struct MfbiChangeMap **out);

// Number of cells in the change map.
//
// # Safety
// `map` must be a live handle.
uintptr_t mfbi_change_map_cells(const struct MfbiChangeMap *map);

// Copy out one cell, row-major order.
//
// # Safety
// `map` must be a live handle; `cell` must be valid.
enum MfbiStatus mfbi_change_map_cell(const struct MfbiChangeMap *map,
                                     uintptr_t index,
                                     struct MfbiCell *cell);

// Write the painted change image and the cell report.
//
// # Safety
// `map` must be a live handle; paths must be valid nul-terminated strings.
enum MfbiStatus mfbi_change_map_write(const struct MfbiChangeMap *map,
                                      const char *image_path,
                                      const char *report_path);

// # Safety
// `map` must come from this library and not be freed twice.
void mfbi_change_map_free(struct MfbiChangeMap *map);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MFBI_H */
