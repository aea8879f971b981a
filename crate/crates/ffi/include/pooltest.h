#ifndef POOLTEST_H
#define POOLTEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PtStatus {
  PT_STATUS_OK = 0,
  /**
   * Invalid argument value.
   */
  PT_STATUS_PARAMETER = 1,
  /**
   * `m * gamma` not divisible by `n`; the message names the nearest valid `m`.
   */
  PT_STATUS_DIVISIBILITY = 2,
  /**
   * Internal consistency check failed.
   */
  PT_STATUS_INTEGRITY = 3,
  /**
   * Input too large for exhaustive enumeration.
   */
  PT_STATUS_CAPACITY = 4,
  PT_STATUS_IO = 5,
  PT_STATUS_NULL_POINTER = 6,
  /**
   * Output buffer shorter than the result; the required length was still written.
   */
  PT_STATUS_BUFFER_TOO_SMALL = 7,
  PT_STATUS_PANIC = 8,
} PtStatus;

typedef enum PtAlgorithm {
  PT_ALGORITHM_COMP = 0,
  PT_ALGORITHM_DD = 1,
} PtAlgorithm;

/**
 * Opaque pooling design.
 */
typedef struct PtDesign PtDesign;

/**
 * Opaque infection vector.
 */
typedef struct PtInfection PtInfection;

/**
 * Opaque test outcome vector.
 */
typedef struct PtOutcomes PtOutcomes;

typedef struct PtDesignStats {
  size_t n;
  size_t m;
  size_t min_test_degree;
  size_t max_test_degree;
  double mean_test_degree;
  size_t max_item_degree;
  size_t multi_edge_count;
  size_t untested;
} PtDesignStats;

typedef struct PtAdaptiveReport {
  size_t tests_used;
  size_t max_tests_per_item;
  size_t max_test_size;
  size_t declared_count;
  /**
   * Declared set equals the drawn truth.
   */
  bool success;
} PtAdaptiveReport;

/**
 * Threshold values; regimes whose constraint was not given are NaN.
 */
typedef struct PtThresholds {
  double theta;
  double m_inf_delta;
  double m_dd_delta;
  double m_ada_delta;
  double m_inf_gamma;
  double m_dd_gamma;
  double matching_bound;
  double m_ada_gamma;
  uint64_t delta_dd;
} PtThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty when none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *pt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pt_version(void);

/**
 * Output schema version shared with the CLI.
 */
uint32_t pt_schema_version(void);

enum PtStatus pt_design_delta_regular(size_t n,
                                      size_t m,
                                      size_t delta,
                                      uint64_t seed,
                                      struct PtDesign **out);

enum PtStatus pt_design_gamma_config(size_t n,
                                     size_t m,
                                     size_t gamma,
                                     uint64_t seed,
                                     struct PtDesign **out);

enum PtStatus pt_design_gamma_matching(size_t n,
                                       size_t m,
                                       size_t gamma,
                                       uint64_t seed,
                                       struct PtDesign **out);

/**
 * Configuration design for `theta >= 0.5`, matching design below.
 */
enum PtStatus pt_design_gamma_auto(size_t n,
                                   size_t m,
                                   size_t gamma,
                                   double theta,
                                   uint64_t seed,
                                   struct PtDesign **out);

/**
 * Explicit design in CSR form: test `a` holds
 * `members[offsets[a] .. offsets[a + 1]]`; `offsets` has `m + 1` entries.
 */
enum PtStatus pt_design_from_tests(size_t n,
                                   size_t m,
                                   const size_t *offsets,
                                   const size_t *members,
                                   struct PtDesign **out);

/**
 * Releases a design; null is ignored.
 */
void pt_design_free(struct PtDesign *design);

enum PtStatus pt_design_stats(const struct PtDesign *design, struct PtDesignStats *out);

/**
 * Borrows the sorted member list of `test` (multi-edges repeated). The
 * pointer is valid until the design is freed.
 */
enum PtStatus pt_design_test_members(const struct PtDesign *design,
                                     size_t test,
                                     const size_t **members,
                                     size_t *len);

/**
 * Uniform weight-`k` infection vector.
 */
enum PtStatus pt_infection_uniform(size_t n, size_t k, uint64_t seed, struct PtInfection **out);

enum PtStatus pt_infection_from_list(size_t n,
                                     const size_t *infected,
                                     size_t len,
                                     struct PtInfection **out);

/**
 * Copies the ascending infected indices; see [`pt_decode`] for the buffer protocol.
 */
enum PtStatus pt_infection_get(const struct PtInfection *sigma,
                               size_t *buffer,
                               size_t capacity,
                               size_t *count);

void pt_infection_free(struct PtInfection *sigma);

enum PtStatus pt_outcomes_compute(const struct PtDesign *design,
                                  const struct PtInfection *sigma,
                                  struct PtOutcomes **out);

/**
 * Builds an outcome vector from `m` bytes, non-zero meaning positive.
 */
enum PtStatus pt_outcomes_from_bytes(const uint8_t *results, size_t m, struct PtOutcomes **out);

enum PtStatus pt_outcomes_len(const struct PtOutcomes *outcomes, size_t *m);

enum PtStatus pt_outcomes_get(const struct PtOutcomes *outcomes, size_t test, bool *positive);

void pt_outcomes_free(struct PtOutcomes *outcomes);

/**
 * Decodes `outcomes` and copies the declared-infected indices into
 * `buffer`. `*count` always receives the full result length; when it
 * exceeds `capacity` nothing is copied and `BufferTooSmall` is returned.
 */
enum PtStatus pt_decode(const struct PtDesign *design,
                        const struct PtOutcomes *outcomes,
                        enum PtAlgorithm algorithm,
                        size_t *buffer,
                        size_t capacity,
                        size_t *count);

/**
 * Exact number of weight-`k` vectors consistent with `outcomes`.
 */
enum PtStatus pt_count_consistent(const struct PtDesign *design,
                                  const struct PtOutcomes *outcomes,
                                  size_t k,
                                  uint64_t *out);

/**
 * Draws a uniform weight-`k` truth from `seed` and recovers it with the
 * Δ-divisible splitting strategy.
 */
enum PtStatus pt_adaptive_delta(size_t n,
                                size_t k,
                                size_t delta,
                                uint64_t seed,
                                struct PtAdaptiveReport *out);

/**
 * As [`pt_adaptive_delta`] for tests of at most `gamma` individuals.
 */
enum PtStatus pt_adaptive_gamma(size_t n,
                                size_t k,
                                size_t gamma,
                                uint64_t seed,
                                struct PtAdaptiveReport *out);

/**
 * Evaluates every threshold at `(n, k)`. Pass a non-positive `delta` or
 * `gamma` to skip that regime, and NaN `theta` to derive it from `k`.
 */
enum PtStatus pt_thresholds(double n,
                            double k,
                            double theta,
                            double delta,
                            double gamma,
                            struct PtThresholds *out);

/**
 * Counting bound on the success probability of any design with `m` tests
 * and at most `delta` tests per individual.
 */
enum PtStatus pt_success_upper_bound(uint64_t n,
                                     uint64_t k,
                                     uint64_t m,
                                     uint64_t delta,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POOLTEST_H */
