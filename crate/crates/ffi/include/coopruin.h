#ifndef COOPRUIN_H
#define COOPRUIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CoopruinStatus {
  COOPRUIN_STATUS_OK = 0,
  COOPRUIN_STATUS_NULL_POINTER = 1,
  COOPRUIN_STATUS_INVALID_ARGUMENT = 2,
  COOPRUIN_STATUS_OUTSIDE_REGION = 3,
  COOPRUIN_STATUS_PARSE = 4,
  COOPRUIN_STATUS_IO = 5,
  COOPRUIN_STATUS_INTERNAL = 6,
  COOPRUIN_STATUS_PANIC = 7,
} CoopruinStatus;

/**
 * Opaque graph handle.
 */
typedef struct CoopruinGraph CoopruinGraph;

/**
 * Opaque earning-rate field handle.
 */
typedef struct CoopruinRates CoopruinRates;

/**
 * Monte Carlo estimate with a 95% interval.
 */
typedef struct CoopruinEstimate {
  double point;
  double ci_low;
  double ci_high;
  double std_error;
  uint64_t n_replicas;
  uint64_t n_censored;
} CoopruinEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *coopruin_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *coopruin_version(void);

/**
 * Builds a graph from a spec such as `cycle:4`, `grid:3x3` or `file:path`.
 *
 * # Safety
 * `spec` must be a nul-terminated string; `out` must be writable.
 */
enum CoopruinStatus coopruin_graph_from_spec(const char *spec, struct CoopruinGraph **out);

/**
 * Builds a graph on `n` vertices from `m` edges stored as `2m` endpoints.
 *
 * # Safety
 * `edges` must point to `2 * m` readable values (may be NULL when `m` is 0);
 * `out` must be writable.
 */
enum CoopruinStatus coopruin_graph_from_edges(uintptr_t n,
                                              const uintptr_t *edges,
                                              uintptr_t m,
                                              struct CoopruinGraph **out);

/**
 * # Safety
 * `graph` must come from a `coopruin_graph_*` constructor and not be used
 * afterwards. NULL is ignored.
 */
void coopruin_graph_free(struct CoopruinGraph *graph);

/**
 * Vertex count, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
uintptr_t coopruin_graph_vertex_count(const struct CoopruinGraph *graph);

/**
 * `max_x sum_y d(x, y)`, the distance-sum term of the survival bound.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum CoopruinStatus coopruin_graph_distance_sum_max(const struct CoopruinGraph *graph,
                                                    uint64_t *out);

/**
 * Rate field from `len` explicit rates.
 *
 * # Safety
 * `rates` must point to `len` readable doubles; `out` must be writable.
 */
enum CoopruinStatus coopruin_rates_new(const double *rates,
                                       uintptr_t len,
                                       struct CoopruinRates **out);

/**
 * `n` i.i.d. rates from a distribution spec (`uniform:0.4,1.2`, ...),
 * drawn from `seed`.
 *
 * # Safety
 * `spec` must be a nul-terminated string; `out` must be writable.
 */
enum CoopruinStatus coopruin_rates_sample(const char *spec,
                                          uintptr_t n,
                                          uint64_t seed,
                                          struct CoopruinRates **out);

/**
 * # Safety
 * `rates` must come from a `coopruin_rates_*` constructor and not be used
 * afterwards. NULL is ignored.
 */
void coopruin_rates_free(struct CoopruinRates *rates);

/**
 * Number of rates, or 0 for NULL.
 *
 * # Safety
 * `rates` must be NULL or a live handle.
 */
uintptr_t coopruin_rates_len(const struct CoopruinRates *rates);

/**
 * Copies up to `cap` rates into `buf` and returns the total count.
 *
 * # Safety
 * `rates` must be a live handle or NULL; `buf` must hold `cap` doubles.
 */
uintptr_t coopruin_rates_copy(const struct CoopruinRates *rates, double *buf, uintptr_t cap);

/**
 * Mean rate.
 *
 * # Safety
 * `rates` must be a live handle and `out` writable.
 */
enum CoopruinStatus coopruin_rates_phi_bar(const struct CoopruinRates *rates, double *out);

/**
 * Probability that a walk stepping up at rate `phi_bar` and down at rate 1
 * from `start` reaches `upper` before `lower`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoopruinStatus coopruin_ruin_two_sided(double phi_bar,
                                            int64_t start,
                                            int64_t lower,
                                            int64_t upper,
                                            double *out);

/**
 * Lower bound on global survival under perfect cooperation.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CoopruinStatus coopruin_survival_bound_infinite_mu(const struct CoopruinGraph *graph,
                                                        const struct CoopruinRates *rates,
                                                        uint64_t c,
                                                        double *out);

/**
 * Exact global survival without cooperation, `prod_z (1 - phi_z^-(c+1))^+`.
 *
 * # Safety
 * `rates` must be live and `out` writable.
 */
enum CoopruinStatus coopruin_survival_no_cooperation(const struct CoopruinRates *rates,
                                                     uint64_t c,
                                                     double *out);

/**
 * Closed-form two-person exit law at full cooperation, in the order
 * (0,-1), (-1,0), (1,-1), (-1,1).
 *
 * # Safety
 * `out` must point to four writable doubles.
 */
enum CoopruinStatus coopruin_two_person_exit_probs(double phi_x,
                                                   double phi_y,
                                                   uint64_t c,
                                                   double *out);

/**
 * Exit law from solving the two-person chain, same order as
 * [`coopruin_two_person_exit_probs`].
 *
 * # Safety
 * `out` must point to four writable doubles.
 */
enum CoopruinStatus coopruin_two_person_exact_exit_probs(double phi_x,
                                                         double phi_y,
                                                         uint64_t c,
                                                         double *out);

/**
 * Expected two-person survivors; `mu` is 0 or `INFINITY`, `exact` selects
 * the solved chain over the closed form at full cooperation.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoopruinStatus coopruin_two_person_expected_survivors(double phi_x,
                                                           double phi_y,
                                                           uint64_t c,
                                                           double mu,
                                                           bool exact,
                                                           double *out);

/**
 * Monte Carlo global survival with survival certificates. `mu` may be
 * `INFINITY`; `t_max` may be `INFINITY` when every replica is decided.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CoopruinStatus coopruin_estimate_survival(const struct CoopruinGraph *graph,
                                               const struct CoopruinRates *rates,
                                               double mu,
                                               uint64_t c,
                                               double t_max,
                                               uint64_t replicas,
                                               uint64_t seed,
                                               struct CoopruinEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COOPRUIN_H */
