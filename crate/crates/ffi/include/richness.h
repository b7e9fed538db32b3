#ifndef RICHNESS_H
#define RICHNESS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RICHNESS_MASK_NOF1 1

#define RICHNESS_MASK_BREAKAWAY 2

#define RICHNESS_MASK_CHAO1 4

typedef enum RichnessStatus {
  RICHNESS_STATUS_OK = 0,
  RICHNESS_STATUS_NULL_POINTER = 1,
  RICHNESS_STATUS_INVALID_INPUT = 2,
  RICHNESS_STATUS_INVALID_CONFIG = 3,
  RICHNESS_STATUS_ESTIMATION_FAILED = 4,
  RICHNESS_STATUS_PANIC = 5,
} RichnessStatus;

typedef enum RichnessEstimator {
  RICHNESS_ESTIMATOR_NOF1 = 0,
  RICHNESS_ESTIMATOR_BREAKAWAY = 1,
  RICHNESS_ESTIMATOR_CHAO1 = 2,
} RichnessEstimator;

/**
 * Opaque simulation report.
 */
typedef struct RichnessReport RichnessReport;

/**
 * Opaque frequency count table.
 */
typedef struct RichnessTable RichnessTable;

/**
 * One richness estimate. Fields that do not apply are NaN (`f1_hat`) or
 * zero with `has_model = 0` (`p`, `q`).
 */
typedef struct RichnessEstimate {
  double c_hat;
  double se;
  double f0_hat;
  double f1_hat;
  int32_t has_model;
  uint32_t p;
  uint32_t q;
  /**
   * Number of warnings attached to the estimate.
   */
  uint32_t warning_count;
} RichnessEstimate;

typedef struct RichnessSimConfig {
  uint64_t true_richness;
  uint64_t size;
  double prob;
  /**
   * Percentage change applied to the observed singleton count.
   */
  double chimeric_rate;
  uint64_t reps;
  uint64_t seed;
  double trim;
  /**
   * Bitwise OR of `RICHNESS_MASK_*`.
   */
  uint32_t estimator_mask;
} RichnessSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a table from parallel arrays of count values `js` and frequencies `fs`.
 *
 * # Safety
 * `js` and `fs` must each be valid for `len` reads; `out` must be writable.
 */
enum RichnessStatus richness_table_from_counts(const uint64_t *js,
                                               const uint64_t *fs,
                                               size_t len,
                                               struct RichnessTable **out);

/**
 * Builds a table from one abundance per observed taxon.
 *
 * # Safety
 * `abundances` must be valid for `len` reads; `out` must be writable.
 */
enum RichnessStatus richness_table_from_abundances(const uint64_t *abundances,
                                                   size_t len,
                                                   struct RichnessTable **out);

/**
 * Parses `j f_j` lines (tab, comma or space separated).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum RichnessStatus richness_table_parse(const char *text, struct RichnessTable **out);

/**
 * # Safety
 * `table` must be null or a handle from this library not yet freed.
 */
void richness_table_free(struct RichnessTable *table);

/**
 * Number of observed taxa; 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
uint64_t richness_table_observed(const struct RichnessTable *table);

/**
 * `f_j`, or 0 when absent or for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
uint64_t richness_table_get(const struct RichnessTable *table, uint64_t j);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RichnessStatus richness_estimate(const struct RichnessTable *table,
                                      enum RichnessEstimator estimator,
                                      struct RichnessEstimate *out);

/**
 * Runs a replicated simulation. Output is deterministic in `config`.
 *
 * # Safety
 * `config` must be readable and `out` writable.
 */
enum RichnessStatus richness_simulate(const struct RichnessSimConfig *config,
                                      struct RichnessReport **out);

/**
 * # Safety
 * `report` must be null or a handle from this library not yet freed.
 */
void richness_report_free(struct RichnessReport *report);

/**
 * Report as JSON; null on failure. Free with [`richness_string_free`].
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *richness_report_to_json(const struct RichnessReport *report);

/**
 * Report as CSV with `precision` decimals; null on failure.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *richness_report_to_csv(const struct RichnessReport *report, uint32_t precision);

/**
 * Named statistic for one estimator, NaN when absent.
 *
 * # Safety
 * `report` must be a live handle and `name` a NUL-terminated string.
 */
double richness_report_statistic(const struct RichnessReport *report,
                                 enum RichnessEstimator estimator,
                                 const char *name);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void richness_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next library call on the same thread.
 */
const char *richness_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *richness_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RICHNESS_H */
