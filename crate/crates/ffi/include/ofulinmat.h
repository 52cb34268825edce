#ifndef OFULINMAT_H
#define OFULINMAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum OfuStatus {
  OFU_STATUS_OK = 0,
  OFU_STATUS_NULL_POINTER = 1,
  OFU_STATUS_INVALID_ARGUMENT = 2,
  OFU_STATUS_DIMENSION_MISMATCH = 3,
  OFU_STATUS_NON_FINITE = 4,
  OFU_STATUS_SOLVER = 5,
  OFU_STATUS_IO = 6,
  OFU_STATUS_PANIC = 7,
} OfuStatus;

/*
 Opaque ridge estimator with its confidence ellipsoid.
 */
typedef struct OfuEstimator OfuEstimator;

/*
 Opaque zero-sum game matrix.
 */
typedef struct OfuGame OfuGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ofu_version(void);

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *ofu_last_error_message(void);

/*
 Creates a `rows x cols` game from row-major `entries`.

 # Safety
 `entries` must point to `rows * cols` doubles; `out` must be writable.
 */
enum OfuStatus ofu_game_new(size_t rows, size_t cols, const double *entries, struct OfuGame **out);

/*
 # Safety
 `game` must come from [`ofu_game_new`] and not be used afterwards.
 */
void ofu_game_free(struct OfuGame *game);

/*
 Solves the game: writes the maximin row strategy (`rows` doubles), the
 minimax column strategy (`cols` doubles) and the value.

 # Safety
 `game` must be a live handle; the output buffers must have the stated
 lengths.
 */
enum OfuStatus ofu_game_solve(const struct OfuGame *game,
                              double *row_strategy,
                              size_t row_len,
                              double *col_strategy,
                              size_t col_len,
                              double *value);

/*
 Creates an estimator for `experts` weights with regularizer `lambda`,
 parameter bound `bound` and confidence level `1 - delta`.

 # Safety
 `out` must be writable.
 */
enum OfuStatus ofu_estimator_new(double lambda,
                                 double bound,
                                 double delta,
                                 size_t experts,
                                 struct OfuEstimator **out);

/*
 # Safety
 `est` must come from [`ofu_estimator_new`] and not be used afterwards.
 */
void ofu_estimator_free(struct OfuEstimator *est);

/*
 Adds one observation `(z, reward)`.

 # Safety
 `est` must be a live handle; `z` must point to `len` doubles.
 */
enum OfuStatus ofu_estimator_absorb(struct OfuEstimator *est,
                                    const double *z,
                                    size_t len,
                                    double reward);

/*
 Writes the regularized least-squares estimate (`len` must equal the
 number of experts).

 # Safety
 `est` must be a live handle; `out` must have room for `len` doubles.
 */
enum OfuStatus ofu_estimator_estimate(const struct OfuEstimator *est, double *out, size_t len);

/*
 Writes the squared confidence radius.

 # Safety
 `est` must be a live handle; `out` must be writable.
 */
enum OfuStatus ofu_estimator_beta(const struct OfuEstimator *est, double *out);

/*
 Writes `sqrt(x^T V^{-1} x)`.

 # Safety
 `est` must be a live handle; `x` must point to `len` doubles.
 */
enum OfuStatus ofu_estimator_ellipsoid_norm(const struct OfuEstimator *est,
                                            const double *x,
                                            size_t len,
                                            double *out);

/*
 Number of observations absorbed so far, or 0 for a null handle.

 # Safety
 `est` must be null or a live handle.
 */
size_t ofu_estimator_observations(const struct OfuEstimator *est);

/*
 Case-study configuration as a TOML string; release it with
 [`ofu_string_free`].
 */
char *ofu_default_config_toml(void);

/*
 # Safety
 `s` must come from this library and not be used afterwards.
 */
void ofu_string_free(char *s);

/*
 Runs an experiment described by `config_toml` and writes its outputs.
 `out_dir` overrides the configured directory when non-null; `workers`
 is the thread count (0 = one per core).

 # Safety
 `config_toml` must be a NUL-terminated string; `out_dir` must be null or
 NUL-terminated.
 */
enum OfuStatus ofu_run_experiment(const char *config_toml, const char *out_dir, size_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OFULINMAT_H */
