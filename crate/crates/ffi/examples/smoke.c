/* Degrade a phantom, run both solvers, report best vs final SNR. */
#include <stdio.h>
#include <math.h>
#include "tvdeconv.h"

#define CHECK(call)                                                   \
  do {                                                                \
    TvdStatus s_ = (call);                                            \
    if (s_ != TVD_STATUS_OK) {                                        \
      char msg_[256];                                                 \
      tvd_last_error_message(msg_, sizeof msg_);                      \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg_);  \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  TvdImage *truth = NULL, *f = NULL, *u1 = NULL, *u2 = NULL;
  TvdKernel *kernel = NULL;
  TvdKernelSpec spec = {TVD_KERNEL_KIND_AVERAGE, 5, 0.0};
  CHECK(tvd_phantom(TVD_PHANTOM_COMPOSITE, 32, &truth));
  CHECK(tvd_kernel_new(spec, &kernel));
  CHECK(tvd_degrade(truth, kernel, 0.01, 7, &f));

  TvdSolverConfig cfg = tvd_solver_config_default();
  TvdSolver solvers[2] = {TVD_SOLVER_FTVD3, TVD_SOLVER_FTVD4};
  for (int i = 0; i < 2; i++) {
    TvdTrace *trace = NULL;
    size_t len = 0, best = 0;
    TvdRecordInfo info;
    double residual = -1.0;
    CHECK(tvd_solve(solvers[i], f, kernel, &cfg, truth, &trace));
    CHECK(tvd_trace_len(trace, &len));
    CHECK(tvd_trace_best(trace, TVD_BEST_BY_SNR, &best));
    CHECK(tvd_trace_record(trace, len - 1, &info));
    CHECK(tvd_trace_decompose(trace, kernel, best, &u1, &u2, &residual));
    printf("solver %d records %zu best %zu final_snr %.4f residual %.3e\n", i, len, best, info.snr_db, residual);
    if (!info.has_snr || !(residual >= 0.0)) return 1;
    tvd_image_free(u1);
    tvd_image_free(u2);
    tvd_trace_free(trace);
  }

  /* error path: kernel larger than the image */
  TvdImage *tiny = NULL;
  TvdImage *out = NULL;
  double px[4] = {0.0, 1.0, 0.0, 1.0};
  CHECK(tvd_image_new(2, px, 4, &tiny));
  if (tvd_degrade(tiny, kernel, 0.0, 0, &out) != TVD_STATUS_KERNEL_TOO_LARGE || out != NULL) return 1;
  printf("error path ok\n");

  tvd_image_free(tiny);
  tvd_image_free(f);
  tvd_image_free(truth);
  tvd_kernel_free(kernel);
  return 0;
}
