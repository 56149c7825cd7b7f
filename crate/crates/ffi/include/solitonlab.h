#ifndef SOLITONLAB_H
#define SOLITONLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_INVALID_ARGUMENT = 3,
  SL_STATUS_SYNTAX = 4,
  SL_STATUS_DOMAIN = 5,
  SL_STATUS_UNKNOWN_ENTRY = 6,
  SL_STATUS_CONFIG = 7,
  SL_STATUS_NO_CONVERGENCE = 8,
  SL_STATUS_GEOMETRY = 9,
  SL_STATUS_IO = 10,
  SL_STATUS_BUFFER_TOO_SMALL = 11,
  SL_STATUS_PANIC = 12,
} SlStatus;

// Parsed expression in variables `x1..xn`.
typedef struct SlExpression SlExpression;

// Soliton instance: metric chart, potential, `rho` and `lambda`.
typedef struct SlSoliton SlSoliton;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *sl_last_error(void);

void sl_clear_error(void);

// Library version as a static NUL-terminated string.
const char *sl_version(void);

// # Safety
// `source` must be a valid NUL-terminated string and `out_expr` writable.
enum SlStatus sl_expression_parse(const char *source, struct SlExpression **out_expr);

// # Safety
// `expr` must come from [`sl_expression_parse`] and not be freed yet; NULL is ignored.
void sl_expression_free(struct SlExpression *expr);

// Highest variable index used by the expression.
//
// # Safety
// `expr` must be a live handle.
size_t sl_expression_arity(const struct SlExpression *expr);

// # Safety
// `expr` must be a live handle, `x` must hold `n` values and `value` be writable.
enum SlStatus sl_expression_eval(const struct SlExpression *expr,
                                 const double *x,
                                 size_t n,
                                 double *value);

// Value, gradient (`n` entries) and row-major Hessian (`n*n` entries).
// `gradient` and `hessian` may be NULL when not wanted.
//
// # Safety
// `expr` must be a live handle; non-NULL buffers must have the sizes above.
enum SlStatus sl_expression_eval_jet(const struct SlExpression *expr,
                                     const double *x,
                                     size_t n,
                                     double *value,
                                     double *gradient,
                                     double *hessian);

// Catalog entry with its default parameters.
//
// # Safety
// `id` must be a valid NUL-terminated string and `out_soliton` writable.
enum SlStatus sl_soliton_from_catalog(const char *id, struct SlSoliton **out_soliton);

// Soliton from the JSON definition used by inline scenario entries.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out_soliton` writable.
enum SlStatus sl_soliton_from_json(const char *json, struct SlSoliton **out_soliton);

// # Safety
// `soliton` must come from a `sl_soliton_from_*` call and not be freed yet; NULL is ignored.
void sl_soliton_free(struct SlSoliton *soliton);

// # Safety
// `soliton` must be a live handle or NULL (returns 0).
size_t sl_soliton_dim(const struct SlSoliton *soliton);

// # Safety
// `soliton` must be a live handle; `rho` and `lambda` writable.
enum SlStatus sl_soliton_constants(const struct SlSoliton *soliton, double *rho, double *lambda);

// Base point (`dim` entries).
//
// # Safety
// `soliton` must be a live handle; `x` must hold `len` values.
enum SlStatus sl_soliton_base_point(const struct SlSoliton *soliton, double *x, size_t len);

// Scalar curvature of the metric at `x`.
//
// # Safety
// `soliton` must be a live handle, `x` must hold `n` values and `value` be writable.
enum SlStatus sl_soliton_scalar_curvature(const struct SlSoliton *soliton,
                                          const double *x,
                                          size_t n,
                                          double *value);

// Max-entry residual of `Ric + Hess f − (ρR + λ)g` at `x`.
//
// # Safety
// `soliton` must be a live handle, `x` must hold `n` values and `value` be writable.
enum SlStatus sl_soliton_residual(const struct SlSoliton *soliton,
                                  const double *x,
                                  size_t n,
                                  double *value);

// Lowest `m` eigenvalues of the drifted Laplacian of `f` on `[−L, L]^dim`
// with `points` nodes per axis (odd, ≥ 51), written to `values[0..m]`;
// `values[0]` is the constant mode. `refinement_error` may be NULL.
//
// # Safety
// `f` must be a live handle, `values` must hold `m` values.
enum SlStatus sl_spectral_eigenvalues(const struct SlExpression *f,
                                      size_t dim,
                                      double half_width,
                                      size_t points,
                                      size_t m,
                                      double *values,
                                      double *refinement_error);

// Runs a scenario given as JSON text. `out_dir` may be NULL (default
// directory rules apply). `exit_code` receives 0, or 1 on a hard failure.
//
// # Safety
// `config_json` must be a valid NUL-terminated string, `out_dir` NULL or one,
// and `exit_code` writable.
enum SlStatus sl_run_scenario(const char *config_json, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOLITONLAB_H */
