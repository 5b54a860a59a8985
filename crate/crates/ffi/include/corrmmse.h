#ifndef CORRMMSE_H
#define CORRMMSE_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by all functions.
 */
typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_PARAMETER = 2,
  CM_STATUS_DOMAIN_ERROR = 3,
  CM_STATUS_RANK_DEFICIENT = 4,
  CM_STATUS_NOT_SQUARE = 5,
  CM_STATUS_PARSE_ERROR = 6,
  CM_STATUS_IO_ERROR = 7,
  CM_STATUS_SINGULAR_CHANNEL = 8,
  CM_STATUS_DEGENERATE_INSTANCE = 9,
  CM_STATUS_EXCESSIVE_SKIPS = 10,
  CM_STATUS_NOT_POSITIVE_DEFINITE = 11,
  CM_STATUS_BUFFER_TOO_SMALL = 12,
  CM_STATUS_OUT_OF_RANGE = 13,
  CM_STATUS_PANIC = 99,
} CmStatus;

/**
 * Opaque channel realization `H`.
 */
typedef struct CmChannel CmChannel;

/**
 * Opaque fading model.
 */
typedef struct CmFading CmFading;

/**
 * Opaque gain matrix `B`.
 */
typedef struct CmGainMatrix CmGainMatrix;

/**
 * Opaque sweep result.
 */
typedef struct CmSweep CmSweep;

/**
 * Per-instance metrics at one SNR.
 */
typedef struct CmMetrics {
  double gamma;
  double mmse_exact;
  double mmse_approx;
  double mutual_info;
  double mutual_info_lb;
  double spectral_eff;
  double jensen_lb;
} CmMetrics;

/**
 * Crossing search result. `found` is 0 when no sign change was seen.
 */
typedef struct CmCrossing {
  int32_t found;
  double gamma_star;
  double gamma_lo;
  double gamma_hi;
  double relative_width;
} CmCrossing;

/**
 * One row of a sweep.
 */
typedef struct CmSweepPoint {
  double gamma_db;
  double mmse_exact_mean;
  double mmse_exact_se;
  double mmse_approx_mean;
  double mmse_approx_se;
  double closed_form;
  double deviation_db;
  double shift_db;
  double spectral_eff_mean;
  double jensen_lb_mean;
  double mutual_info_mean;
  double mutual_info_lb_mean;
} CmSweepPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *cm_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *cm_status_name(int32_t status);

/**
 * Synthetic `B_ij = overlap^|i-j|`, normalized to `tr(B^H B) = k`.
 * # Safety
 * `out` must be a valid pointer.
 */
enum CmStatus cm_gain_synthetic(uintptr_t k, double overlap, struct CmGainMatrix **out);

/**
 * Real `k×k` gain matrix from row-major `data`.
 *
 * # Safety
 * `data` must point to `k*k` readable doubles.
 */
enum CmStatus cm_gain_from_real(const double *data, uintptr_t k, struct CmGainMatrix **out);

/**
 * Loads a beam-pattern CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum CmStatus cm_gain_load(const char *path, struct CmGainMatrix **out);

/**
 * # Safety
 * `b` must be null or a handle from a `cm_gain_*` constructor, freed once.
 */
void cm_gain_free(struct CmGainMatrix *b);

/**
 * # Safety
 * `b` must be a live handle.
 */
enum CmStatus cm_gain_dim(const struct CmGainMatrix *b, uintptr_t *out);

/**
 * `(1/K) ln det(B^H B)`.
 *
 * # Safety
 * `b` must be a live handle.
 */
enum CmStatus cm_gain_logdet_per_user(const struct CmGainMatrix *b, double *out);

/**
 * Rician-lognormal composite fading. `mu_in_db` selects decibel units for
 * the shadowing parameters.
 * # Safety
 * `out` must be a valid pointer.
 */
enum CmStatus cm_fading_composite(double rician_factor_db,
                                  double shadow_mean,
                                  double shadow_sigma,
                                  bool mu_in_db,
                                  struct CmFading **out);

/**
 * Log-log-normal rain fading.
 * # Safety
 * `out` must be a valid pointer.
 */
enum CmStatus cm_fading_rain(double mu, double sigma, bool db_conversion, struct CmFading **out);

/**
 * All fading coefficients equal to 1.
 * # Safety
 * `out` must be a valid pointer.
 */
enum CmStatus cm_fading_unit(struct CmFading **out);

/**
 * # Safety
 * `f` must be null or a handle from a `cm_fading_*` constructor, freed once.
 */
void cm_fading_free(struct CmFading *f);

/**
 * Draws `H = B·D^½` from stream `stream` of `seed`. Same inputs give the
 * same channel as trial `stream` of a sweep with that seed.
 *
 * # Safety
 * `b` and `f` must be live handles.
 */
enum CmStatus cm_channel_realize(const struct CmGainMatrix *b,
                                 const struct CmFading *f,
                                 uint64_t seed,
                                 uint64_t stream,
                                 struct CmChannel **out);

/**
 * # Safety
 * `h` must be null or a handle from `cm_channel_realize`, freed once.
 */
void cm_channel_free(struct CmChannel *h);

/**
 * All scalar metrics at linear SNR `gamma`.
 *
 * # Safety
 * `h` must be a live handle.
 */
enum CmStatus cm_channel_metrics(const struct CmChannel *h, double gamma, struct CmMetrics *out);

/**
 * Per-user MMSE SINR into `buf[0..len)`; `len` must be at least K.
 *
 * # Safety
 * `h` must be a live handle and `buf` must have `len` writable doubles.
 */
enum CmStatus cm_channel_sinr(const struct CmChannel *h, double gamma, double *buf, uintptr_t len);

/**
 * SNR where the approximate and exact MMSE cross, searched up to `gamma_max`.
 *
 * # Safety
 * `h` must be a live handle.
 */
enum CmStatus cm_channel_crossing(const struct CmChannel *h,
                                  double gamma_max,
                                  double tol,
                                  struct CmCrossing *out);

/**
 * Closed-form expected MMSE approximation at linear SNR `gamma`.
 *
 * # Safety
 * `b` and `f` must be live handles.
 */
enum CmStatus cm_closed_form(const struct CmGainMatrix *b,
                             const struct CmFading *f,
                             double gamma,
                             double *out);

/**
 * Exponential integral `E₁(x)` for `x > 0`.
 * # Safety
 * `out` must be a valid pointer.
 */
enum CmStatus cm_exp_integral_e1(double x, double *out);

/**
 * Monte Carlo sweep over `points` SNRs from `start_db` to `stop_db`.
 * `threads = 0` uses the global pool; results do not depend on it.
 *
 * # Safety
 * `b` and `f` must be live handles.
 */
enum CmStatus cm_sweep_run(const struct CmGainMatrix *b,
                           const struct CmFading *f,
                           double start_db,
                           double stop_db,
                           uintptr_t points,
                           uintptr_t trials,
                           uint64_t seed,
                           uintptr_t threads,
                           struct CmSweep **out);

/**
 * # Safety
 * `s` must be null or a handle from `cm_sweep_run`, freed once.
 */
void cm_sweep_free(struct CmSweep *s);

/**
 * Number of grid points.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum CmStatus cm_sweep_len(const struct CmSweep *s, uintptr_t *out);

/**
 * Trials used and skipped.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum CmStatus cm_sweep_trials(const struct CmSweep *s, uintptr_t *used, uintptr_t *skipped);

/**
 * Row `index` of the sweep.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum CmStatus cm_sweep_point(const struct CmSweep *s, uintptr_t index, struct CmSweepPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRMMSE_H */
