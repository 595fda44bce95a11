#ifndef POLELOCATE_H
#define POLELOCATE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped on any incompatible change to the functions or structs below.
 */
#define PL_ABI_VERSION 1

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_ARGUMENT = 2,
  PL_STATUS_FILE_NOT_FOUND = 3,
  PL_STATUS_UNSUPPORTED_FORMAT = 4,
  PL_STATUS_CORRUPT_DATA = 5,
  PL_STATUS_IO = 6,
  /**
   * Any other failure caused by the input data.
   */
  PL_STATUS_DATA = 7,
  PL_STATUS_INTERNAL = 8,
  PL_STATUS_PANIC = 9,
} PlStatus;

/**
 * Pipeline configuration handle.
 */
typedef struct PlConfig PlConfig;

/**
 * Ranked corner set handle.
 */
typedef struct PlCornerSet PlCornerSet;

/**
 * Grayscale image handle.
 */
typedef struct PlImage PlImage;

/**
 * Result of a full pipeline run on one image.
 */
typedef struct PlResult PlResult;

typedef struct PlCorner {
  double x;
  double y;
  double response;
  double orientation;
} PlCorner;

/**
 * Half-open rectangle `[top, bottom) x [left, right)`.
 */
typedef struct PlRoi {
  uint32_t top;
  uint32_t bottom;
  uint32_t left;
  uint32_t right;
} PlRoi;

/**
 * One pole in global image coordinates.
 */
typedef struct PlPole {
  uint32_t index;
  double raw_x;
  double raw_y;
  double score;
  double x;
  double y;
  double alpha;
  double beta;
  /**
   * 1 when a reference corner was matched; `corner_x`/`corner_y` are 0 otherwise.
   */
  uint8_t has_corner;
  double corner_x;
  double corner_y;
  uint8_t low_confidence;
} PlPole;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t pl_abi_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *pl_last_error_message(void);

/**
 * Loads an 8-bit PGM or PNG.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PlStatus pl_image_load(const char *path, struct PlImage **out);

/**
 * Copies `height` rows of `width` bytes, `row_stride` bytes apart.
 *
 * # Safety
 * `data` must point to at least `row_stride * (height - 1) + width` bytes.
 */
enum PlStatus pl_image_from_pixels(const uint8_t *data,
                                   uint32_t width,
                                   uint32_t height,
                                   size_t row_stride,
                                   struct PlImage **out);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
uint32_t pl_image_width(const struct PlImage *img);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
uint32_t pl_image_height(const struct PlImage *img);

/**
 * # Safety
 * `img` must be null or a handle not yet freed.
 */
void pl_image_free(struct PlImage *img);

/**
 * # Safety
 * `out` must be writable.
 */
enum PlStatus pl_config_default(struct PlConfig **out);

/**
 * Reads a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PlStatus pl_config_load(const char *path, struct PlConfig **out);

/**
 * Sets the number of ranked corners kept.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum PlStatus pl_config_set_corner_count(struct PlConfig *cfg, size_t n);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void pl_config_free(struct PlConfig *cfg);

/**
 * FAST-9 corners ranked by Harris response, at most `n`.
 *
 * # Safety
 * `img` must be a live handle; `out` must be writable.
 */
enum PlStatus pl_detect_corners(const struct PlImage *img,
                                size_t n,
                                uint8_t threshold,
                                struct PlCornerSet **out);

/**
 * # Safety
 * `set` must be null or a live handle.
 */
size_t pl_corner_set_len(const struct PlCornerSet *set);

/**
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum PlStatus pl_corner_set_get(const struct PlCornerSet *set, size_t index, struct PlCorner *out);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void pl_corner_set_free(struct PlCornerSet *set);

/**
 * ROI from corners; a null `cfg` uses the defaults.
 *
 * # Safety
 * `img` and `corners` must be live handles; `cfg` null or live; `out` writable.
 */
enum PlStatus pl_estimate_roi(const struct PlImage *img,
                              const struct PlCornerSet *corners,
                              const struct PlConfig *cfg,
                              struct PlRoi *out);

/**
 * Corners, ROI, prediction and correction; a null `cfg` uses the defaults.
 *
 * # Safety
 * `img` must be a live handle; `cfg` null or live; `out` writable.
 */
enum PlStatus pl_pipeline_run(const struct PlImage *img,
                              const struct PlConfig *cfg,
                              struct PlResult **out);

/**
 * # Safety
 * `res` must be a live handle; `out` writable.
 */
enum PlStatus pl_result_roi(const struct PlResult *res, struct PlRoi *out);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t pl_result_pole_count(const struct PlResult *res);

/**
 * # Safety
 * `res` must be a live handle; `out` writable.
 */
enum PlStatus pl_result_pole(const struct PlResult *res, size_t index, struct PlPole *out);

/**
 * # Safety
 * `res` must be null or a handle not yet freed.
 */
void pl_result_free(struct PlResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLELOCATE_H */
