#ifndef REHABKIT_H
#define REHABKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Status codes. 1-3 mirror the command-line exit codes.
 */
typedef enum RkStatus {
  RK_STATUS_OK = 0,
  /**
   * Invalid argument or configuration.
   */
  RK_STATUS_USAGE = 1,
  /**
   * Bad or unusable input data.
   */
  RK_STATUS_DATA = 2,
  /**
   * Model missing, malformed, of another version or schema.
   */
  RK_STATUS_MODEL = 3,
  /**
   * A required pointer argument was null.
   */
  RK_STATUS_NULL_POINTER = 4,
  /**
   * Internal panic caught at the boundary.
   */
  RK_STATUS_PANIC = 5,
} RkStatus;

/**
 * A trained model (repetition classifier or chunk classifier).
 */
typedef struct RkModel RkModel;

/**
 * A preprocessed recording.
 */
typedef struct RkRecording RkRecording;

/**
 * Output of `rk_segment`.
 */
typedef struct RkSegmentation RkSegmentation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rk_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rk_version(void);

/**
 * Number of values written by `rk_repetition_features`.
 */
size_t rk_repetition_feature_count(void);

/**
 * Loads a recording CSV (with its JSON sidecar) and preprocesses it with
 * the default settings.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RkStatus rk_recording_load(const char *path, struct RkRecording **out);

/**
 * Builds and preprocesses a recording from `n` samples. `accel` and `gyro`
 * hold `3 * n` interleaved x, y, z values (m/s², deg/s); `baselines` holds
 * the six resting readings in the same units. `exercise` is one of "HS",
 * "SKE", "IRQ", "SLR".
 *
 * # Safety
 * Array arguments must point to at least the stated number of doubles.
 */
enum RkStatus rk_recording_from_samples(const double *t,
                                        const double *accel,
                                        const double *gyro,
                                        size_t n,
                                        double sampling_rate_hz,
                                        const double *baselines,
                                        const char *exercise,
                                        const char *subject_id,
                                        struct RkRecording **out);

/**
 * Sample count, or 0 for a null handle.
 *
 * # Safety
 * `rec` must be null or a live handle.
 */
size_t rk_recording_len(const struct RkRecording *rec);

/**
 * Borrows one normalized channel. `channel` is one of "ax", "ay", "az",
 * "gx", "gy", "gz", "mag", "pitch", "roll". The data lives as long as the
 * recording.
 *
 * # Safety
 * `rec` must be a live handle; `data` and `len` must be writable.
 */
enum RkStatus rk_recording_channel(const struct RkRecording *rec,
                                   const char *channel,
                                   const double **data,
                                   size_t *len);

/**
 * # Safety
 * `rec` must be null or a handle not yet freed.
 */
void rk_recording_free(struct RkRecording *rec);

/**
 * Repetition features of samples `start..end` into `out`, which must hold
 * `rk_repetition_feature_count` values.
 *
 * # Safety
 * `rec` must be a live handle; `out` must point to `out_len` doubles.
 */
enum RkStatus rk_repetition_features(const struct RkRecording *rec,
                                     size_t start,
                                     size_t end,
                                     double *out,
                                     size_t out_len);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RkStatus rk_model_load(const char *path, struct RkModel **out);

/**
 * Input width the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t rk_model_n_features(const struct RkModel *model);

/**
 * Classifies one feature vector. `p_positive` receives the probability of
 * the positive class (deviant repetition, or repetition for a chunk
 * classifier), `positive` receives 1 or 0. Either output may be null.
 *
 * # Safety
 * `model` must be a live handle; `x` must point to `n` doubles.
 */
enum RkStatus rk_model_predict(const struct RkModel *model,
                               const double *x,
                               size_t n,
                               double *p_positive,
                               int32_t *positive);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void rk_model_free(struct RkModel *model);

/**
 * Segments a recording with a chunk classifier and default settings.
 * Too few resting samples is not an error: the result is empty.
 *
 * # Safety
 * `rec` and `segmenter` must be live handles; `out` must be writable.
 */
enum RkStatus rk_segment(const struct RkRecording *rec,
                         const struct RkModel *segmenter,
                         uint64_t seed,
                         struct RkSegmentation **out);

/**
 * Number of detected repetitions, or 0 for a null handle.
 *
 * # Safety
 * `seg` must be null or a live handle.
 */
size_t rk_segmentation_count(const struct RkSegmentation *seg);

/**
 * Sample range `[start, end)` of repetition `i`.
 *
 * # Safety
 * `seg` must be a live handle; `start` and `end` must be writable.
 */
enum RkStatus rk_segmentation_repetition(const struct RkSegmentation *seg,
                                         size_t i,
                                         size_t *start,
                                         size_t *end);

/**
 * # Safety
 * `seg` must be null or a handle not yet freed.
 */
void rk_segmentation_free(struct RkSegmentation *seg);

/**
 * Mean segmentation accuracy over `n` recordings given true and detected
 * repetition counts.
 *
 * # Safety
 * `actual` and `detected` must point to `n` values; `out` must be writable.
 */
enum RkStatus rk_segmentation_accuracy(const size_t *actual,
                                       const size_t *detected,
                                       size_t n,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REHABKIT_H */
