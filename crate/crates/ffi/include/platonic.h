#ifndef PLATONIC_H
#define PLATONIC_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PlatonicStatus {
  PLATONIC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PLATONIC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PLATONIC_STATUS_INVALID_UTF8 = 2,
  /**
   * Array or grid dimensions do not fit together.
   */
  PLATONIC_STATUS_SHAPE = 3,
  /**
   * An argument value is out of range.
   */
  PLATONIC_STATUS_VALUE = 4,
  /**
   * A file exists but its contents are malformed.
   */
  PLATONIC_STATUS_FORMAT = 5,
  /**
   * A file could not be read or written.
   */
  PLATONIC_STATUS_IO = 6,
  PLATONIC_STATUS_CONFIG = 7,
  /**
   * An internal invariant failed.
   */
  PLATONIC_STATUS_INTERNAL = 8,
} PlatonicStatus;

/**
 * Image formation models.
 */
typedef enum PlatonicFormation {
  PLATONIC_FORMATION_VISUAL_HULL = 0,
  PLATONIC_FORMATION_ABSORPTION_ONLY = 1,
  /**
   * Emission-absorption with the unnormalized per-sample weights.
   */
  PLATONIC_FORMATION_EMISSION_ABSORPTION_PAPER = 2,
  /**
   * Emission-absorption by front-to-back compositing.
   */
  PLATONIC_FORMATION_EMISSION_ABSORPTION_COMPOSITE = 3,
} PlatonicFormation;

/**
 * Image with `channels x n x n` values.
 */
typedef struct PlatonicImage PlatonicImage;

/**
 * Trained encoder, generator and discriminator.
 */
typedef struct PlatonicModel PlatonicModel;

/**
 * Voxel grid with `channels x n x n x n` values in `[0, 1]`.
 */
typedef struct PlatonicVolume PlatonicVolume;

/**
 * Reconstruction quality of one volume against its ground truth.
 */
typedef struct PlatonicMetrics {
  /**
   * Mean structural dissimilarity over the evaluation views.
   */
  double dssim;
  double rmse;
  /**
   * Intersection over union at threshold 0.5.
   */
  double iou;
  /**
   * Weighted directional chamfer distance; infinite when the ground
   * truth is empty.
   */
  double chamfer;
} PlatonicMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *platonic_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *platonic_version(void);

/**
 * Creates a volume from `channels * n^3` values in `[0, 1]`, ordered
 * channel, depth, row, column.
 *
 * # Safety
 * `values` must point to `len` floats and `out` to writable storage.
 */
enum PlatonicStatus platonic_volume_new(size_t channels,
                                        size_t n,
                                        const float *values,
                                        size_t len,
                                        struct PlatonicVolume **out);

/**
 * Reads a PVOX file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum PlatonicStatus platonic_volume_load(const char *path, struct PlatonicVolume **out);

/**
 * Writes a PVOX file.
 *
 * # Safety
 * `volume` must be a live handle and `path` NUL-terminated.
 */
enum PlatonicStatus platonic_volume_save(const struct PlatonicVolume *volume, const char *path);

/**
 * Channel count and resolution of a volume.
 *
 * # Safety
 * `volume` must be a live handle; the outputs must be writable.
 */
enum PlatonicStatus platonic_volume_dims(const struct PlatonicVolume *volume,
                                         size_t *channels,
                                         size_t *n);

/**
 * Copies the values into `buffer`, which must hold exactly the volume's
 * `channels * n^3` floats.
 *
 * # Safety
 * `volume` must be a live handle and `buffer` writable for `len` floats.
 */
enum PlatonicStatus platonic_volume_copy_values(const struct PlatonicVolume *volume,
                                                float *buffer,
                                                size_t len);

/**
 * Releases a volume; null is ignored.
 *
 * # Safety
 * `volume` must come from this library and not be used afterwards.
 */
void platonic_volume_free(struct PlatonicVolume *volume);

/**
 * Reads an 8-bit PNG as a 1- or 3-channel image, resized to `resolution`
 * by area averaging unless it is 0.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum PlatonicStatus platonic_image_load(const char *path,
                                        size_t channels,
                                        size_t resolution,
                                        struct PlatonicImage **out);

/**
 * Writes a 1- or 3-channel image as an 8-bit PNG.
 *
 * # Safety
 * `image` must be a live handle and `path` NUL-terminated.
 */
enum PlatonicStatus platonic_image_save(const struct PlatonicImage *image, const char *path);

/**
 * Channel count and resolution of an image.
 *
 * # Safety
 * `image` must be a live handle; the outputs must be writable.
 */
enum PlatonicStatus platonic_image_dims(const struct PlatonicImage *image,
                                        size_t *channels,
                                        size_t *n);

/**
 * Copies the `channels * n^2` values, ordered channel, row (bottom
 * first), column.
 *
 * # Safety
 * `image` must be a live handle and `buffer` writable for `len` floats.
 */
enum PlatonicStatus platonic_image_copy_values(const struct PlatonicImage *image,
                                               float *buffer,
                                               size_t len);

/**
 * Releases an image; null is ignored.
 *
 * # Safety
 * `image` must come from this library and not be used afterwards.
 */
void platonic_image_free(struct PlatonicImage *image);

/**
 * Renders `volume` seen from azimuth/elevation in degrees (`0, 0` is the
 * canonical view).
 *
 * # Safety
 * `volume` must be a live handle and `out` writable.
 */
enum PlatonicStatus platonic_render(const struct PlatonicVolume *volume,
                                    double azimuth_deg,
                                    double elevation_deg,
                                    enum PlatonicFormation formation,
                                    struct PlatonicImage **out);

/**
 * Loads a PNET checkpoint.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum PlatonicStatus platonic_model_load(const char *path, struct PlatonicModel **out);

/**
 * Image resolution and channel count the model expects.
 *
 * # Safety
 * `model` must be a live handle; the outputs must be writable.
 */
enum PlatonicStatus platonic_model_input_dims(const struct PlatonicModel *model,
                                              size_t *channels,
                                              size_t *n);

/**
 * Reconstructs a volume, in the camera frame of `image`.
 *
 * # Safety
 * `model` and `image` must be live handles and `out` writable.
 */
enum PlatonicStatus platonic_model_reconstruct(const struct PlatonicModel *model,
                                               const struct PlatonicImage *image,
                                               struct PlatonicVolume **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void platonic_model_free(struct PlatonicModel *model);

/**
 * Compares a reconstruction with its ground truth over ten views drawn
 * from `view_seed`.
 *
 * # Safety
 * `recon` and `truth` must be live handles and `out` writable.
 */
enum PlatonicStatus platonic_evaluate(const struct PlatonicVolume *recon,
                                      const struct PlatonicVolume *truth,
                                      enum PlatonicFormation formation,
                                      uint64_t view_seed,
                                      struct PlatonicMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLATONIC_H */
