#ifndef TVDECONV_H
#define TVDECONV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TvdStatus {
  TVD_STATUS_OK = 0,
  TVD_STATUS_NULL_POINTER = 1,
  TVD_STATUS_INVALID_ARGUMENT = 2,
  TVD_STATUS_SHAPE_MISMATCH = 3,
  TVD_STATUS_KERNEL_TOO_LARGE = 4,
  TVD_STATUS_SINGULAR_SYSTEM = 5,
  TVD_STATUS_NO_CONVERGENCE = 6,
  TVD_STATUS_MISSING_SCORES = 7,
  TVD_STATUS_DEGENERATE_REFERENCE = 8,
  TVD_STATUS_IO = 9,
  TVD_STATUS_FORMAT = 10,
  TVD_STATUS_OUT_OF_RANGE = 11,
  TVD_STATUS_PANIC = 12,
} TvdStatus;

typedef enum TvdPhantom {
  TVD_PHANTOM_COMPOSITE = 0,
  TVD_PHANTOM_BLOCKS = 1,
} TvdPhantom;

typedef enum TvdKernelKind {
  TVD_KERNEL_KIND_AVERAGE = 0,
  TVD_KERNEL_KIND_GAUSSIAN = 1,
  TVD_KERNEL_KIND_DELTA = 2,
} TvdKernelKind;

typedef enum TvdVariant {
  TVD_VARIANT_ISOTROPIC = 0,
  TVD_VARIANT_ANISOTROPIC = 1,
} TvdVariant;

typedef enum TvdSolver {
  /**
   * Quadratic penalty with β continuation.
   */
  TVD_SOLVER_FTVD3 = 0,
  /**
   * Augmented Lagrangian with fixed β.
   */
  TVD_SOLVER_FTVD4 = 1,
} TvdSolver;

typedef enum TvdBestBy {
  TVD_BEST_BY_SNR = 0,
  TVD_BEST_BY_OBJECTIVE_TV = 1,
} TvdBestBy;

/**
 * Opaque square image.
 */
typedef struct TvdImage TvdImage;

/**
 * Opaque blur kernel.
 */
typedef struct TvdKernel TvdKernel;

/**
 * Opaque solver trace.
 */
typedef struct TvdTrace TvdTrace;

/**
 * Blur kernel description; `size` is ignored for `Delta`, `sigma` unless `Gaussian`.
 */
typedef struct TvdKernelSpec {
  enum TvdKernelKind kind;
  size_t size;
  double sigma;
} TvdKernelSpec;

/**
 * Solver parameters. `beta_schedule` may be NULL (with length 0) to use
 * `1, 2, 4, ..., 1024`.
 */
typedef struct TvdSolverConfig {
  double mu;
  enum TvdVariant tv_variant;
  double tol;
  size_t max_inner_iters;
  const double *beta_schedule;
  size_t beta_schedule_len;
  double beta_fixed;
  size_t max_multiplier_updates;
  bool record_inner;
} TvdSolverConfig;

/**
 * Scalar fields of one trace record.
 */
typedef struct TvdRecordInfo {
  size_t stage_index;
  size_t inner_iter;
  double beta;
  bool has_snr;
  double snr_db;
  double objective_tv;
  double penalty_objective;
  double constraint_residual;
  double rel_change;
  bool stage_end;
} TvdRecordInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length excluding NUL.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t tvd_last_error_message(char *buf, size_t len);

/**
 * Creates an `n x n` image from `len = n*n` row-major samples.
 *
 * # Safety
 * `data` must point to `len` readable doubles; `out` must be writable.
 */
enum TvdStatus tvd_image_new(size_t n, const double *data, size_t len, struct TvdImage **out);

/**
 * Releases an image; NULL is ignored.
 *
 * # Safety
 * `image` must be NULL or a handle not yet freed.
 */
void tvd_image_free(struct TvdImage *image);

/**
 * # Safety
 * `image` must be a live handle and `out` writable.
 */
enum TvdStatus tvd_image_size(const struct TvdImage *image, size_t *out);

/**
 * Copies the `n*n` row-major samples into `buf`, which must hold `len >= n*n` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum TvdStatus tvd_image_copy_data(const struct TvdImage *image, double *buf, size_t len);

/**
 * Loads a PGM or PNG, normalized to `[0, 1]`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum TvdStatus tvd_image_load(const char *path, struct TvdImage **out);

/**
 * Writes a 16-bit binary PGM (values clamped to `[0, 1]`).
 *
 * # Safety
 * `image` must be live; `path` NUL-terminated.
 */
enum TvdStatus tvd_image_save_pgm(const struct TvdImage *image, const char *path);

/**
 * Synthetic ground truth of side `n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TvdStatus tvd_phantom(enum TvdPhantom kind, size_t n, struct TvdImage **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum TvdStatus tvd_kernel_new(struct TvdKernelSpec spec, struct TvdKernel **out);

/**
 * # Safety
 * `kernel` must be NULL or a handle not yet freed.
 */
void tvd_kernel_free(struct TvdKernel *kernel);

/**
 * `f = K u0 + noise`, with noise deterministic in `seed`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum TvdStatus tvd_degrade(const struct TvdImage *u0,
                           const struct TvdKernel *kernel,
                           double sigma,
                           uint64_t seed,
                           struct TvdImage **out);

/**
 * Default parameters: `mu = 500`, isotropic, `tol = 1e-4`, 100 inner
 * iterations, default β schedule, `beta_fixed = 10`, 500 multiplier updates.
 */
struct TvdSolverConfig tvd_solver_config_default(void);

/**
 * Runs a solver on observation `f`. `ground_truth` may be NULL; when given,
 * every record carries an SNR.
 *
 * # Safety
 * Handles must be live; `config` readable; `out` writable.
 */
enum TvdStatus tvd_solve(enum TvdSolver solver,
                         const struct TvdImage *f,
                         const struct TvdKernel *kernel,
                         const struct TvdSolverConfig *config,
                         const struct TvdImage *ground_truth,
                         struct TvdTrace **out);

/**
 * # Safety
 * `trace` must be NULL or a handle not yet freed.
 */
void tvd_trace_free(struct TvdTrace *trace);

/**
 * Number of records.
 *
 * # Safety
 * `trace` live, `out` writable.
 */
enum TvdStatus tvd_trace_len(const struct TvdTrace *trace, size_t *out);

/**
 * # Safety
 * `trace` live, `out` writable.
 */
enum TvdStatus tvd_trace_converged(const struct TvdTrace *trace, bool *out);

/**
 * # Safety
 * `trace` live, `out` writable.
 */
enum TvdStatus tvd_trace_record(const struct TvdTrace *trace,
                                size_t index,
                                struct TvdRecordInfo *out);

/**
 * Copy of the iterate `u` of record `index`.
 *
 * # Safety
 * `trace` live, `out` writable.
 */
enum TvdStatus tvd_trace_iterate(const struct TvdTrace *trace, size_t index, struct TvdImage **out);

/**
 * Index of the best record (earliest on ties).
 *
 * # Safety
 * `trace` live, `out` writable.
 */
enum TvdStatus tvd_trace_best(const struct TvdTrace *trace, enum TvdBestBy criterion, size_t *out);

/**
 * Splits record `index` into `u1` (zero-mean potential of `w`) and
 * `u2 = u - u1`. `residual` (may be NULL) receives `max |w - D u1|`.
 *
 * # Safety
 * Handles live; `kernel` must be the one the trace was solved with (only its
 * size matters); `u1`, `u2` writable.
 */
enum TvdStatus tvd_trace_decompose(const struct TvdTrace *trace,
                                   const struct TvdKernel *kernel,
                                   size_t index,
                                   struct TvdImage **u1,
                                   struct TvdImage **u2,
                                   double *residual);

/**
 * Writes the trace in the `trace.csv` format.
 *
 * # Safety
 * `trace` live; `path` NUL-terminated.
 */
enum TvdStatus tvd_trace_write_csv(const struct TvdTrace *trace, const char *path);

/**
 * # Safety
 * Handles live; `out` writable.
 */
enum TvdStatus tvd_snr_db(const struct TvdImage *u, const struct TvdImage *reference, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVDECONV_H */
