#ifndef DDGPCE_H
#define DDGPCE_H

/* Generated by cbindgen from ddgpce-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum DdgpceStatus {
  DDGPCE_STATUS_OK = 0,
  DDGPCE_STATUS_INVALID_ARGUMENT = 1,
  DDGPCE_STATUS_CONFIG_ERROR = 2,
  DDGPCE_STATUS_MODEL_ERROR = 3,
  DDGPCE_STATUS_NUMERICAL_ERROR = 4,
  DDGPCE_STATUS_PANIC = 5,
} DdgpceStatus;

/**
 * Opaque surrogate handle: the archive plus its evaluable form.
 */
typedef struct DdgpceSurrogate DdgpceSurrogate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *ddgpce_version(void);

/**
 * Copy the last error message for this thread into `buffer` (truncated to
 * `capacity - 1` bytes, always NUL terminated when capacity > 0). Returns
 * the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buffer` must point to at least `capacity` writable bytes, or be null
 * (null is allowed for querying the length).
 */
size_t ddgpce_last_error(char *buffer, size_t capacity);

/**
 * Load a surrogate archive (single- or bi-fidelity) from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DdgpceStatus ddgpce_surrogate_load(const char *path, struct DdgpceSurrogate **out);

/**
 * Run the fit pipeline described by a configuration file and return the
 * fitted surrogate.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DdgpceStatus ddgpce_fit_config_file(const char *config_path, struct DdgpceSurrogate **out);

/**
 * Run the bi-fidelity pipeline described by a configuration file and return
 * the corrected surrogate.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DdgpceStatus ddgpce_bifit_config_file(const char *config_path, struct DdgpceSurrogate **out);

/**
 * Input dimension of a surrogate; 0 for a null handle.
 *
 * # Safety
 * `surrogate` must be a live handle from this library or null.
 */
size_t ddgpce_surrogate_dimension(const struct DdgpceSurrogate *surrogate);

/**
 * Whether the surrogate carries a bi-fidelity correction link.
 *
 * # Safety
 * `surrogate` must be a live handle from this library or null.
 */
int ddgpce_surrogate_is_bifidelity(const struct DdgpceSurrogate *surrogate);

/**
 * Evaluate a surrogate on `rows` points of dimension `dimension`
 * (row-major), writing one output per row.
 *
 * # Safety
 * `points` must hold `rows * dimension` doubles and `out` `rows` doubles.
 */
enum DdgpceStatus ddgpce_surrogate_evaluate(const struct DdgpceSurrogate *surrogate,
                                            const double *points,
                                            size_t rows,
                                            size_t dimension,
                                            double *out);

/**
 * Save a surrogate handle back to a JSON archive.
 *
 * # Safety
 * `surrogate` must be a live handle and `path` a NUL-terminated string.
 */
enum DdgpceStatus ddgpce_surrogate_save(const struct DdgpceSurrogate *surrogate, const char *path);

/**
 * Release a surrogate handle. Null is a no-op.
 *
 * # Safety
 * `surrogate` must be a handle returned by this library, freed once.
 */
void ddgpce_surrogate_free(struct DdgpceSurrogate *surrogate);

/**
 * Estimate VaR and CVaR from output samples with uniform probabilities.
 * `estimator` is 0 for the shifted-positive-part form, 1 for the
 * tail-indicator form.
 *
 * # Safety
 * `values` must hold `length` doubles; the out pointers must be valid.
 */
enum DdgpceStatus ddgpce_var_cvar(const double *values,
                                  size_t length,
                                  double beta,
                                  int estimator,
                                  double *out_var,
                                  double *out_cvar);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DDGPCE_H */
