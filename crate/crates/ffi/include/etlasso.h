/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef ETLASSO_H
#define ETLASSO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum {
  ETL_STATUS_OK = 0,
  ETL_STATUS_NULL_POINTER = 1,
  ETL_STATUS_INVALID_ARGUMENT = 2,
  ETL_STATUS_ZERO_VARIANCE = 3,
  ETL_STATUS_NON_FINITE = 4,
  ETL_STATUS_RANK_DEFICIENT = 5,
  ETL_STATUS_NUMERIC = 6,
  ETL_STATUS_BUFFER_TOO_SMALL = 7,
  ETL_STATUS_PANIC = 8,
} EtlStatus;

/**
 * Standardized design and centered response.
 */
typedef struct EtlDataset EtlDataset;

/**
 * A fitted Lasso path on the standardized scale.
 */
typedef struct EtlPath EtlPath;

/**
 * Selected features with raw-scale coefficients.
 */
typedef struct EtlSelection EtlSelection;

/**
 * Tuning knobs shared by the selection and path calls. Obtain defaults
 * from [`etl_options_default`].
 */
typedef struct {
  size_t grid_count;
  double grid_ratio;
  double tol;
  size_t max_iter;
  /**
   * Nonzero: the second-stage pseudo block permutes only the stage-one
   * survivors instead of the whole design.
   */
  int32_t stage2_selected_only;
  /**
   * Nonzero: coefficients are the Lasso fit at the final cutoff instead
   * of least squares.
   */
  int32_t lasso_refit;
  /**
   * Baseline paths stop once more than this fraction of n is active.
   */
  double max_df_fraction;
} EtlOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *etl_version(void);

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *etl_last_error(void);

/**
 * Fills `out` with the default options.
 */
EtlStatus etl_options_default(EtlOptions *out);

/**
 * Standardizes an `n x p` row-major matrix `x` and response `y` (length
 * `n`) into a new dataset handle.
 */
EtlStatus etl_dataset_new(const double *x, size_t n, size_t p, const double *y, EtlDataset **out);

void etl_dataset_free(EtlDataset *ds);

size_t etl_dataset_nrows(const EtlDataset *ds);

size_t etl_dataset_ncols(const EtlDataset *ds);

/**
 * Two-stage ET-Lasso selection with permutations drawn from `seed`.
 */
EtlStatus etl_select(const EtlDataset *ds,
                     uint64_t seed,
                     const EtlOptions *opts,
                     EtlSelection **out);

/**
 * Lasso tuned by BIC (`folds == 0`) or by `folds`-fold cross-validation.
 */
EtlStatus etl_baseline_select(const EtlDataset *ds,
                              size_t folds,
                              uint64_t seed,
                              const EtlOptions *opts,
                              EtlSelection **out);

void etl_selection_free(EtlSelection *s);

/**
 * Number of selected features.
 */
size_t etl_selection_len(const EtlSelection *s);

/**
 * Copies the selected 0-based column indices, ascending.
 */
EtlStatus etl_selection_indices(const EtlSelection *s, size_t *buf, size_t len);

/**
 * Copies the raw-scale coefficients aligned with the indices.
 */
EtlStatus etl_selection_coefficients(const EtlSelection *s, double *buf, size_t len);

double etl_selection_intercept(const EtlSelection *s);

/**
 * Cutoff of stage 1 or 2; NaN for baselines and for a skipped stage 2.
 */
double etl_selection_cutoff(const EtlSelection *s, uint32_t stage);

/**
 * Lambda chosen by a baseline criterion; NaN for ET-Lasso selections.
 */
double etl_selection_lambda(const EtlSelection *s);

/**
 * Fits the full Lasso path on the dataset's own grid.
 */
EtlStatus etl_path_fit(const EtlDataset *ds, const EtlOptions *opts, EtlPath **out);

void etl_path_free(EtlPath *p);

/**
 * Number of solved grid points.
 */
size_t etl_path_len(const EtlPath *p);

size_t etl_path_nfeatures(const EtlPath *p);

/**
 * Copies the solved lambda values, descending.
 */
EtlStatus etl_path_lambdas(const EtlPath *p, double *buf, size_t len);

/**
 * Copies the standardized-scale coefficients at grid point `t`.
 */
EtlStatus etl_path_coefficients(const EtlPath *p, size_t t, double *buf, size_t len);

/**
 * Copies each feature's entry value (largest lambda with a nonzero
 * coefficient, 0 if it never entered).
 */
EtlStatus etl_path_entry_values(const EtlPath *p, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ETLASSO_H */
