/* Generated by cbindgen from src/lib.rs; do not edit. */

#ifndef KPZ_TAILS_H
#define KPZ_TAILS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
typedef enum KpzStatus {
  KPZ_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KPZ_NULL_POINTER = 1,
  /**
   * An argument is outside the domain of the operation.
   */
  KPZ_DOMAIN = 2,
  /**
   * The sampler's constraint set looks empty.
   */
  KPZ_INFEASIBLE = 3,
  /**
   * Rejection sampling would almost never accept.
   */
  KPZ_LOW_ACCEPTANCE = 4,
  KPZ_USAGE = 5,
  KPZ_IO = 6,
  KPZ_PANIC = 7,
} KpzStatus;

/**
 * Case of a two-point hull.
 */
typedef enum KpzCase {
  KPZ_TWO_EXTREME = 0,
  KPZ_INFINITELY_MANY = 1,
  KPZ_ONE_EXTREME = 2,
} KpzCase;

/**
 * Opaque Gibbs chain over a non-intersecting line ensemble.
 */
typedef struct KpzChain KpzChain;

/**
 * A log-probability estimate.
 */
typedef struct KpzEstimate {
  double log_p;
  /**
   * Standard error of `log_p`; infinite when `log_p` is `-inf`.
   */
  double stderr_log;
  uint64_t n;
  uint64_t hits;
  /**
   * One-sided 95% upper bound on `log_p`.
   */
  double upper_log;
} KpzEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * on the same thread; never null.
 */
const char *kpz_last_error(void);

/**
 * Leading-order one-point rate `(4/3) theta^{3/2}`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KpzStatus kpz_one_point_log_rate(double theta, double *out);

/**
 * Two-point rate for heights `a * theta`, `b * theta` at `-sqrt(theta)`, `sqrt(theta)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KpzStatus kpz_two_point_log_rate(double theta, double a, double b, double *out);

/**
 * Hull case of a two-point spec.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KpzStatus kpz_classify(double theta, double a, double b, enum KpzCase *out);

/**
 * Points where the outer tangents touch the parabola.
 *
 * # Safety
 * `left` and `right` must be valid for writes.
 */
enum KpzStatus kpz_tangency_points(double theta, double a, double b, double *left, double *right);

/**
 * Analytic lower bound on the log avoidance probability over `[z1, z2]`.
 * A positive `mesh_epsilon` selects the mesh bound; otherwise the closed
 * form. `flagged` is set when the bound lies outside its proved range and
 * may be null.
 *
 * # Safety
 * `out` must be valid for writes; `flagged` must be null or valid for writes.
 */
enum KpzStatus kpz_avoidance_lower_bound(double z1,
                                         double z2,
                                         double mesh_epsilon,
                                         double *out,
                                         bool *flagged);

/**
 * Analytic upper bound on the log avoidance probability over `[-z, z]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KpzStatus kpz_avoidance_upper_bound(double z, double *out);

/**
 * Monte Carlo log probability that a rate-2 bridge from `1 - z^2` to
 * `1 - z^2` over `[-z, z]` stays above `-x^2`. `tilted` selects the
 * resampling estimator; otherwise plain counting. Results depend only on
 * the arguments.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KpzStatus kpz_mc_avoidance(double z,
                                double grid_step,
                                uint64_t n,
                                uint64_t seed,
                                bool tilted,
                                struct KpzEstimate *out);

/**
 * Creates a chain of `k` ordered curves on `[z1, z2]` with entrance values
 * `left[0..k]` and exit values `right[0..k]`, both strictly decreasing.
 * `t > 0` selects the soft interaction at that time; `t == 0` hard
 * non-intersection. Free the result with [`kpz_chain_free`].
 *
 * # Safety
 * `left` and `right` must point to `k` readable values; `out` must be
 * valid for writes.
 */
enum KpzStatus kpz_chain_new(size_t k,
                             const double *left,
                             const double *right,
                             double z1,
                             double z2,
                             double grid_step,
                             double t,
                             double sup_bound,
                             uint64_t seed,
                             struct KpzChain **out);

/**
 * Advances the chain by `sweeps` full sweeps.
 *
 * # Safety
 * `chain` must come from [`kpz_chain_new`] and not be freed.
 */
enum KpzStatus kpz_chain_run(struct KpzChain *chain, size_t sweeps);

/**
 * Number of grid points per curve.
 *
 * # Safety
 * `chain` must come from [`kpz_chain_new`]; `out` must be valid for writes.
 */
enum KpzStatus kpz_chain_grid_len(const struct KpzChain *chain, size_t *out);

/**
 * Fraction of accepted proposals so far.
 *
 * # Safety
 * `chain` must come from [`kpz_chain_new`]; `out` must be valid for writes.
 */
enum KpzStatus kpz_chain_acceptance_rate(const struct KpzChain *chain, double *out);

/**
 * Copies curve `index` (0 is the top) into `buf`, which must hold exactly
 * the grid length.
 *
 * # Safety
 * `chain` must come from [`kpz_chain_new`]; `buf` must be valid for `len` writes.
 */
enum KpzStatus kpz_chain_curve(const struct KpzChain *chain, size_t index, double *buf, size_t len);

/**
 * Releases a chain. Null is ignored.
 *
 * # Safety
 * `chain` must be null or come from [`kpz_chain_new`] and not be freed yet.
 */
void kpz_chain_free(struct KpzChain *chain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPZ_TAILS_H */
