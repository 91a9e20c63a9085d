#ifndef DIVGEOM_H
#define DIVGEOM_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  DG_STATUS_OK = 0,
  // A required pointer argument was null.
  DG_STATUS_NULL_POINTER = 1,
  // Malformed spec, configuration, weights, dimensions or constraint set.
  DG_STATUS_INVALID_ARGUMENT = 2,
  // A mass vector is not a probability distribution.
  DG_STATUS_INVALID_DISTRIBUTION = 3,
  // A mass lies outside the domain of the divergence.
  DG_STATUS_DOMAIN_VIOLATION = 4,
  // The moment constraints have no interior point.
  DG_STATUS_INFEASIBLE = 5,
  // A solver exhausted its budget or no interior solution exists.
  DG_STATUS_NON_CONVERGENCE = 6,
  // An output buffer is shorter than the value it should receive.
  DG_STATUS_BUFFER_TOO_SMALL = 7,
  // The requested quantity does not exist for this divergence or report.
  DG_STATUS_UNAVAILABLE = 8,
  // An internal error was caught at the boundary.
  DG_STATUS_PANIC = 9,
} DgStatus;

// Opaque solver result.
typedef struct DgReport DgReport;

// Opaque divergence specification.
typedef struct DgSpec DgSpec;

// Numeric tolerances, mirroring the library defaults of [`dg_config_default`].
typedef struct {
  double simplex_tol;
  double interior_floor;
  double grad_fd_step;
  double solver_tol;
  size_t max_iter;
} DgConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library defaults.
DgConfig dg_config_default(void);

// Message describing the last failed call on this thread, or null after a
// successful call. The string stays valid until the next call on the thread.
const char *dg_last_error(void);

// Static name of a status code, such as `"non_convergence"`.
const char *dg_status_name(int32_t status);

// Library version as a static string.
const char *dg_version(void);

// Builds a divergence spec from a family name (`euclidean`, `kl`,
// `reverse_kl`, `bregman`, `f_divergence`, `renyi`), an optional generator
// name (null when unused) and a Rényi order (NaN when unused).
//
// # Safety
// `family` and a non-null `generator` must be NUL-terminated strings and
// `out_spec` must be valid for a write.
DgStatus dg_spec_new(const char *family, const char *generator, double order, DgSpec **out_spec);

// Releases a spec. Null is ignored.
//
// # Safety
// `spec` must come from [`dg_spec_new`] and not have been freed.
void dg_spec_free(DgSpec *spec);

// `D(P‖Q)` for distributions of length `n`.
//
// # Safety
// `p` and `q` must point to `n` doubles; `cfg` may be null for defaults.
DgStatus dg_eval(const DgSpec *spec,
                 const double *p,
                 const double *q,
                 size_t n,
                 const DgConfig *cfg,
                 double *out_value);

// `δD(P‖Q)/δq` written to `out_values[0..n]`.
//
// # Safety
// `p`, `q` and `out_values` must point to `n` doubles; `cfg` may be null.
DgStatus dg_grad_second(const DgSpec *spec,
                        const double *p,
                        const double *q,
                        size_t n,
                        const DgConfig *cfg,
                        double *out_values);

// `δD(P‖Q)/δp` written to `out_values[0..n]`; `UNAVAILABLE` for Rényi.
//
// # Safety
// `p`, `q` and `out_values` must point to `n` doubles; `cfg` may be null.
DgStatus dg_grad_first(const DgSpec *spec,
                       const double *p,
                       const double *q,
                       size_t n,
                       const DgConfig *cfg,
                       double *out_values);

// Divergence inner product `⟨PQ‖RQ⟩`.
//
// # Safety
// `p`, `q` and `r` must point to `n` doubles; `cfg` may be null.
DgStatus dg_inner_product(const DgSpec *spec,
                          const double *p,
                          const double *q,
                          const double *r,
                          size_t n,
                          const DgConfig *cfg,
                          double *out_value);

// Point of the divergence line at position `alpha`, written to
// `out_mass[0..n]`. The multiplier and residual are written when their
// pointers are non-null.
//
// # Safety
// `p`, `q` and `out_mass` must point to `n` doubles; `cfg`,
// `out_multiplier` and `out_residual` may be null.
DgStatus dg_line_point(const DgSpec *spec,
                       const double *p,
                       const double *q,
                       size_t n,
                       double alpha,
                       const DgConfig *cfg,
                       double *out_mass,
                       double *out_multiplier,
                       double *out_residual);

// Weighted centroid of `count` distributions stored row by row in
// `points[0..count*n]`. Null `weights` means uniform weights.
//
// # Safety
// `points` must point to `count*n` doubles, a non-null `weights` to
// `count` doubles; `cfg` may be null; `out_report` must be valid for a write.
DgStatus dg_centroid(const DgSpec *spec,
                     const double *points,
                     size_t count,
                     size_t n,
                     const double *weights,
                     const DgConfig *cfg,
                     DgReport **out_report);

// Projection of `q` onto the ball `{R : D(center‖R) ≤ kappa}`.
//
// # Safety
// `center` and `q` must point to `n` doubles; `cfg` may be null;
// `out_report` must be valid for a write.
DgStatus dg_project_ball(const DgSpec *spec,
                         const double *center,
                         const double *q,
                         size_t n,
                         double kappa,
                         const DgConfig *cfg,
                         DgReport **out_report);

// Projection of `p` onto `{R : Σ_z T_k(z) r_z = m_k}` for the `k` statistics
// stored row by row in `statistics[0..k*n]` and targets `targets[0..k]`.
//
// # Safety
// `p` must point to `n` doubles, `statistics` to `k*n` and `targets` to `k`;
// `cfg` may be null; `out_report` must be valid for a write.
DgStatus dg_project_moments(const DgSpec *spec,
                            const double *p,
                            size_t n,
                            const double *statistics,
                            const double *targets,
                            size_t k,
                            const DgConfig *cfg,
                            DgReport **out_report);

// Weighted mean of `count` vectors of dimension `dim`, which minimizes the
// weighted Bregman divergence to them for the named generator.
//
// # Safety
// `generator` must be a NUL-terminated string, `points` must point to
// `count*dim` doubles, `weights` to `count` and `out_mean` to `dim`.
DgStatus dg_bregman_centroid_vector(const char *generator,
                                    const double *points,
                                    size_t count,
                                    size_t dim,
                                    const double *weights,
                                    double *out_mean);

// Releases a report. Null is ignored.
//
// # Safety
// `report` must come from a solver call and not have been freed.
void dg_report_free(DgReport *report);

// Number of atoms of the solution, or 0 for a null report.
//
// # Safety
// `report` must be null or a live report.
size_t dg_report_support_size(const DgReport *report);

// Copies the solution mass into `out[0..len]`.
//
// # Safety
// `report` must be a live report and `out` must point to `len` doubles.
DgStatus dg_report_solution(const DgReport *report, double *out, size_t len);

// Normalization multiplier `C`.
//
// # Safety
// `report` must be a live report and `out` valid for a write.
DgStatus dg_report_multiplier_c(const DgReport *report, double *out);

// Number of moment multipliers, 0 unless the report is a moment projection.
//
// # Safety
// `report` must be null or a live report.
size_t dg_report_beta_len(const DgReport *report);

// Copies the moment multipliers into `out[0..len]`.
//
// # Safety
// `report` must be a live report and `out` must point to `len` doubles.
DgStatus dg_report_beta(const DgReport *report, double *out, size_t len);

// Line position `α*` of a ball projection.
//
// # Safety
// `report` must be a live report and `out` valid for a write.
DgStatus dg_report_alpha_star(const DgReport *report, double *out);

// Stationarity and constraint residuals of the solution.
//
// # Safety
// `report` must be a live report and both outputs valid for writes.
DgStatus dg_report_residuals(const DgReport *report,
                             double *out_stationarity,
                             double *out_constraint);

// Solver iterations, or 0 for a null report.
//
// # Safety
// `report` must be null or a live report.
size_t dg_report_iterations(const DgReport *report);

// Whether the solver met its tolerance; false for a null report.
//
// # Safety
// `report` must be null or a live report.
bool dg_report_converged(const DgReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVGEOM_H */
