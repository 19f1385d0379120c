#ifndef CREDCOV_H
#define CREDCOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_NON_FINITE = 3,
  CC_STATUS_IO = 4,
  CC_STATUS_SERIALIZATION = 5,
  CC_STATUS_BUFFER_TOO_SMALL = 6,
  CC_STATUS_PANIC = 7,
} CcStatus;

typedef enum CcStudy {
  CC_STUDY_COVERAGE = 0,
  CC_STUDY_RATES = 1,
  CC_STUDY_COX_FREEDMAN = 2,
  CC_STUDY_EB_STUDY = 3,
} CcStudy;

/**
 * Opaque posterior state.
 */
typedef struct CcPosterior CcPosterior;

typedef struct CcRadius {
  double radius;
  double std_error;
  size_t draws;
} CcRadius;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *credcov_last_error_message(void);

/**
 * Conjugate posterior for data `y[0..len]` (length is the truncation index).
 * `kappa_p = 0` selects the direct problem, otherwise `kappa_i = i^{-kappa_p}`.
 *
 * # Safety
 * `y` must point to `len` doubles and `out` must be writable.
 */
enum CcStatus credcov_posterior_new(const double *y,
                                    size_t len,
                                    double alpha,
                                    double n,
                                    double kappa_p,
                                    struct CcPosterior **out);

/**
 * # Safety
 * `h` must come from [`credcov_posterior_new`] and not be used afterwards.
 */
void credcov_posterior_free(struct CcPosterior *h);

/**
 * Number of stored coordinates, 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t credcov_posterior_len(const struct CcPosterior *h);

/**
 * Copies the posterior means into `out[0..cap]`.
 *
 * # Safety
 * `h` must be live and `out` must hold `cap` doubles.
 */
enum CcStatus credcov_posterior_means(const struct CcPosterior *h, double *out, size_t cap);

/**
 * Copies the posterior variances into `out[0..cap]`.
 *
 * # Safety
 * `h` must be live and `out` must hold `cap` doubles.
 */
enum CcStatus credcov_posterior_variances(const struct CcPosterior *h, double *out, size_t cap);

/**
 * Sup-norm radius on a grid of `grid_size` points.
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum CcStatus credcov_sup_radius(const struct CcPosterior *h,
                                 double gamma,
                                 size_t grid_size,
                                 size_t draws,
                                 uint64_t seed,
                                 uint64_t stream_id,
                                 struct CcRadius *out);

/**
 * L2 radius.
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum CcStatus credcov_l2_radius(const struct CcPosterior *h,
                                double gamma,
                                size_t draws,
                                uint64_t seed,
                                uint64_t stream_id,
                                struct CcRadius *out);

/**
 * Log marginal likelihood of `y` under smoothness `alpha`.
 *
 * # Safety
 * `y` must point to `len` doubles and `out` must be writable.
 */
enum CcStatus credcov_marginal_loglik(const double *y,
                                      size_t len,
                                      double alpha,
                                      double n,
                                      double kappa_p,
                                      double *out);

/**
 * Empirical-Bayes smoothness over `[alpha_min, alpha_max]`.
 *
 * # Safety
 * `y` must point to `len` doubles and `out` must be writable.
 */
enum CcStatus credcov_empirical_bayes_alpha(const double *y,
                                            size_t len,
                                            double n,
                                            double kappa_p,
                                            double alpha_min,
                                            double alpha_max,
                                            double *out);

/**
 * Basis function `phi_i(x)`, `i >= 1`, `x` in `[0, 1]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CcStatus credcov_basis_eval(size_t i, double x, double *out);

/**
 * `sum_i theta_i phi_i` on the grid `j / grid_size`, written to
 * `out[0..grid_size]`.
 *
 * # Safety
 * `theta` must point to `len` doubles and `out` must hold `cap` doubles.
 */
enum CcStatus credcov_synthesize(const double *theta,
                                 size_t len,
                                 size_t grid_size,
                                 double *out,
                                 size_t cap);

/**
 * Runs a study from a JSON experiment config and returns the JSON report
 * in `out_json` (free with [`credcov_string_free`]). `other_alpha` is used
 * only by the oversmoothing demo; `workers = 0` uses the default pool.
 * `passed` receives whether every check passed.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; out pointers writable.
 */
enum CcStatus credcov_run_study_json(const char *config_json,
                                     enum CcStudy study,
                                     double other_alpha,
                                     size_t workers,
                                     char **out_json,
                                     bool *passed);

/**
 * # Safety
 * `s` must be null or come from this library and not be used afterwards.
 */
void credcov_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREDCOV_H */
