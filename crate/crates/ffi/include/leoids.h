#ifndef LEOIDS_H
#define LEOIDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define LEOIDS_OK 0

/**
 * A required pointer argument was null.
 */
#define LEOIDS_ERR_NULL 1

#define LEOIDS_ERR_CONFIG 2

#define LEOIDS_ERR_DATA 3

#define LEOIDS_ERR_NUMERIC 4

/**
 * A buffer passed in is too small.
 */
#define LEOIDS_ERR_BUFFER 5

/**
 * A Rust panic was caught at the boundary.
 */
#define LEOIDS_ERR_PANIC 6

/**
 * Alert sensitivity for [`leoids_detector_new`].
 */
#define LEOIDS_MODE_NORMAL 0

#define LEOIDS_MODE_SAFE 1

/**
 * A windowed detector with its model(s).
 */
typedef struct LeoidsDetector LeoidsDetector;

/**
 * A loaded classifier.
 */
typedef struct LeoidsModel LeoidsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *leoids_version(void);

/**
 * Copies the calling thread's last error message into `buf`, truncating to
 * `len - 1` bytes plus NUL. Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t leoids_last_error(char *buf, size_t len);

/**
 * Simulates one scenario and writes `trace.csv`, `vectors.csv` and
 * `schedule.csv` into `out_dir`, which is created if needed.
 *
 * # Safety
 * `out_dir` must be a valid NUL-terminated string.
 */
int32_t leoids_simulate(uint8_t scenario, double duration, uint64_t seed, const char *out_dir);

/**
 * Loads a model file. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t leoids_model_load(const char *path, LeoidsModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`leoids_model_load`] not yet freed.
 */
void leoids_model_free(LeoidsModel *model);

/**
 * Number of output classes, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t leoids_model_classes(const LeoidsModel *model);

/**
 * Raw feature values per row the model expects, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t leoids_model_features(const LeoidsModel *model);

/**
 * Class probabilities for `rows` raw feature rows.
 *
 * `features` holds `rows * leoids_model_features(model)` values, row-major,
 * in the model's column order and unscaled. `out` receives
 * `rows * leoids_model_classes(model)` probabilities; `out_len` is its capacity.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
int32_t leoids_model_predict_proba(const LeoidsModel *model,
                                   const double *features,
                                   size_t rows,
                                   double *out,
                                   size_t out_len);

/**
 * Builds a detector from a model file, or an MLP/GRU pair when `gru_path`
 * is non-null. `mode` is [`LEOIDS_MODE_NORMAL`] or [`LEOIDS_MODE_SAFE`];
 * `period` is the window length in seconds.
 *
 * # Safety
 * Paths must be valid NUL-terminated strings (`gru_path` may be null);
 * `out` must be a valid pointer.
 */
int32_t leoids_detector_new(const char *model_path,
                            const char *gru_path,
                            int32_t mode,
                            double period,
                            LeoidsDetector **out);

/**
 * # Safety
 * `detector` must be null or a handle from [`leoids_detector_new`] not yet freed.
 */
void leoids_detector_free(LeoidsDetector *detector);

/**
 * Replays a trace file as fast as possible and writes the alert log to
 * `alerts_path`. `alerts` and `windows` (both optional) receive the counts.
 *
 * # Safety
 * Paths must be valid NUL-terminated strings; count pointers null or valid.
 */
int32_t leoids_detector_run(const LeoidsDetector *detector,
                            const char *trace_path,
                            const char *alerts_path,
                            size_t *alerts,
                            size_t *windows);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEOIDS_H */
