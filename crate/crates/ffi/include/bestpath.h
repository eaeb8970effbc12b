#ifndef BESTPATH_H
#define BESTPATH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum BpaStatus {
  BPA_STATUS_OK = 0,
  BPA_STATUS_NULL_POINTER = 1,
  BPA_STATUS_INVALID_UTF8 = 2,
  BPA_STATUS_IO = 3,
  BPA_STATUS_DATA = 4,
  BPA_STATUS_INVALID_ARGUMENT = 5,
  BPA_STATUS_UNKNOWN_VARIABLE = 6,
  BPA_STATUS_NUMERICAL = 7,
  BPA_STATUS_OUT_OF_RANGE = 8,
  BPA_STATUS_PANIC = 9,
} BpaStatus;

/**
 * A forest learnt from a table.
 */
typedef struct BpaForest BpaForest;

/**
 * The result of a selection run.
 */
typedef struct BpaReport BpaReport;

/**
 * A loaded data table.
 */
typedef struct BpaTable BpaTable;

/**
 * Options for [`bpa_select`]. Start from [`bpa_select_options_default`].
 */
typedef struct BpaSelectOptions {
  /**
   * 0 for the entropy coefficient, 1 for adjusted R².
   */
  uint32_t method;
  /**
   * 0 for AIC, 1 for BIC.
   */
  uint32_t criterion;
  /**
   * 0 for a pooled group variance, 1 for per-group variances.
   */
  uint32_t variance;
  double alpha;
  uint64_t seed;
  uint32_t folds;
  uint32_t permutations;
  uint32_t k_neighbors;
} BpaSelectOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *bpa_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *bpa_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void bpa_string_free(char *s);

/**
 * Load a CSV file. `schema_path` may be null to infer variable kinds.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum BpaStatus bpa_table_load(const char *csv_path, const char *schema_path, struct BpaTable **out);

/**
 * # Safety
 * `table` must be null or a live handle from [`bpa_table_load`].
 */
void bpa_table_free(struct BpaTable *table);

/**
 * # Safety
 * `table` must be a live handle; the outputs must be writable.
 */
enum BpaStatus bpa_table_shape(const struct BpaTable *table, size_t *rows, size_t *vars);

/**
 * Learn the forest of a table.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_forest_build(const struct BpaTable *table,
                                uint32_t criterion_code,
                                uint32_t variance_code,
                                struct BpaForest **out);

/**
 * # Safety
 * `forest` must be null or a live handle from [`bpa_forest_build`].
 */
void bpa_forest_free(struct BpaForest *forest);

/**
 * # Safety
 * `forest` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_forest_n_edges(const struct BpaForest *forest, size_t *out);

/**
 * Forest as JSON; release with [`bpa_string_free`].
 *
 * # Safety
 * `forest` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_forest_to_json(const struct BpaForest *forest, char **out);

/**
 * Forest as a DOT graph; release with [`bpa_string_free`].
 *
 * # Safety
 * `forest` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_forest_to_dot(const struct BpaForest *forest, char **out);

/**
 * Defaults matching the command-line tool.
 */
struct BpaSelectOptions bpa_select_options_default(void);

/**
 * Run selection for `target`. `options` may be null for the defaults. An
 * isolated target is a success whose report has no best step.
 *
 * # Safety
 * `table` must be a live handle, `target` NUL-terminated, `options` null
 * or valid, and `out` writable.
 */
enum BpaStatus bpa_select(const struct BpaTable *table,
                          const char *target,
                          const struct BpaSelectOptions *options,
                          struct BpaReport **out);

/**
 * # Safety
 * `report` must be null or a live handle from [`bpa_select`].
 */
void bpa_report_free(struct BpaReport *report);

/**
 * Best path-step index, or 0 when the target is isolated.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_report_best_k(const struct BpaReport *report, size_t *out);

/**
 * Number of variables kept after pruning.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_report_n_selected(const struct BpaReport *report, size_t *out);

/**
 * Name of the `index`-th kept variable; release with [`bpa_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_report_selected_name(const struct BpaReport *report, size_t index, char **out);

/**
 * Full report as JSON; release with [`bpa_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BpaStatus bpa_report_to_json(const struct BpaReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BESTPATH_H */
