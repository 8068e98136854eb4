#ifndef QGEOM_H
#define QGEOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QgStatus {
  QG_STATUS_OK = 0,
  QG_STATUS_NULL_POINTER = 1,
  QG_STATUS_INVALID_ARGUMENT = 2,
  QG_STATUS_DOMAIN = 3,
  QG_STATUS_NUMERICAL = 4,
  QG_STATUS_BUFFER_TOO_SMALL = 5,
  QG_STATUS_PANIC = 6,
} QgStatus;

typedef enum QgMethod {
  QG_METHOD_PERTURBATIVE = 0,
  QG_METHOD_OVERLAP_FD = 1,
} QgMethod;

/**
 * A model instance.
 */
typedef struct QgModel QgModel;

/**
 * A computed QGT or QGT block.
 */
typedef struct QgTensor QgTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *qg_last_error(void);

/**
 * Creates a built-in model by name (`gho`, `gho-linear`, `gaussian`,
 * `sym-coupled`, `lin-coupled`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QgStatus qg_model_new(const char *name, struct QgModel **out);

/**
 * # Safety
 * `model` must come from [`qg_model_new`] and not be used afterwards.
 */
void qg_model_free(struct QgModel *model);

/**
 * Number of parameters and modes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum QgStatus qg_model_shape(const struct QgModel *model, size_t *params, size_t *modes);

/**
 * Numerical QGT of the state with the given quantum numbers at `cutoff`
 * levels per mode. The perturbative method returns the full tensor,
 * overlap-fd the parameter block.
 *
 * # Safety
 * `model` must be valid; `point` and `qn` must hold `n_point` and `n_qn`
 * elements; `out` must be a valid pointer.
 */
enum QgStatus qg_qgt(const struct QgModel *model,
                     enum QgMethod method,
                     const double *point,
                     size_t n_point,
                     const uint32_t *qn,
                     size_t n_qn,
                     size_t cutoff,
                     struct QgTensor **out);

/**
 * # Safety
 * `t` must come from [`qg_qgt`] and not be used afterwards.
 */
void qg_tensor_free(struct QgTensor *t);

/**
 * # Safety
 * Pointers must be valid.
 */
enum QgStatus qg_tensor_dim(const struct QgTensor *t, size_t *dim);

/**
 * Label of row `i` copied into `buf` (NUL-terminated).
 *
 * # Safety
 * `buf` must hold `len` bytes.
 */
enum QgStatus qg_tensor_label(const struct QgTensor *t, size_t i, char *buf, size_t len);

/**
 * Copies real and imaginary parts (row-major, `dim²` each).
 *
 * # Safety
 * `re` and `im` must hold `len` doubles.
 */
enum QgStatus qg_tensor_values(const struct QgTensor *t, double *re, double *im, size_t len);

/**
 * Scalar closed form by quantity name (`purity`, `entropy`, `det-metric`,
 * `scalar-curvature`, `phase-curvature:a,b`, `reduced-phase-curvature`).
 *
 * # Safety
 * As [`qg_qgt`]; `quantity` must be NUL-terminated.
 */
enum QgStatus qg_closed_form_scalar(const struct QgModel *model,
                                    const char *quantity,
                                    const double *point,
                                    size_t n_point,
                                    const uint32_t *qn,
                                    size_t n_qn,
                                    double *value);

/**
 * Scalar curvature of the closed-form parameter metric on the parameter
 * indices `coords` (2 or 3 of them), by finite differences.
 *
 * # Safety
 * As [`qg_qgt`]; `coords` must hold `n_coords` elements.
 */
enum QgStatus qg_scalar_curvature(const struct QgModel *model,
                                  const double *point,
                                  size_t n_point,
                                  const uint32_t *qn,
                                  size_t n_qn,
                                  const size_t *coords,
                                  size_t n_coords,
                                  double *value);

/**
 * Purity, von Neumann entropy and the smallest symplectic eigenvalue of a
 * `2N × 2N` covariance matrix in `(q.., p..)` order.
 *
 * # Safety
 * `cov` must hold `4·modes²` doubles; outputs must be valid.
 */
enum QgStatus qg_gaussian_entanglement(const double *cov,
                                       size_t modes,
                                       double *purity_out,
                                       double *entropy_out,
                                       double *min_nu_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QGEOM_H */
