#ifndef CHOQUARD_H
#define CHOQUARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChqStatus {
  CHQ_STATUS_OK = 0,
  CHQ_STATUS_DOMAIN = 1,
  CHQ_STATUS_CONFIG = 2,
  CHQ_STATUS_REGIME = 3,
  CHQ_STATUS_DATA = 4,
  CHQ_STATUS_GRID_MISMATCH = 5,
  CHQ_STATUS_DEGENERATE = 6,
  CHQ_STATUS_BRACKET = 7,
  CHQ_STATUS_INFEASIBLE = 8,
  CHQ_STATUS_UNSUPPORTED = 9,
  CHQ_STATUS_CONVERGENCE = 10,
  CHQ_STATUS_STAGNATION = 11,
  CHQ_STATUS_CONSISTENCY = 12,
  CHQ_STATUS_IO = 13,
  CHQ_STATUS_NULL_POINTER = 14,
  CHQ_STATUS_PANIC = 15,
} ChqStatus;

// Opaque field on a grid.
typedef struct ChqField ChqField;

// Opaque radial grid.
typedef struct ChqGrid ChqGrid;

// Opaque Riesz kernel matrix.
typedef struct ChqKernel ChqKernel;

typedef struct ChqParams {
  uint32_t n;
  double alpha;
  double q;
} ChqParams;

typedef struct ChqConstants {
  double riesz_norm;
  double hls_sharp;
  double choquard_c0;
  double sobolev_s;
  double nehari_level_bound;
  double constraint_level_bound;
} ChqConstants;

typedef struct ChqBreakdown {
  double a;
  double b;
  double c;
  double d;
  double i;
  double j;
  double h;
  double t;
} ChqBreakdown;

typedef struct ChqLevelReport {
  double level;
  double bound;
  double margin;
  // NaN when no ε was involved.
  double eps_used;
  size_t iterations;
  double residual;
  struct ChqBreakdown breakdown;
  bool passed;
} ChqLevelReport;

typedef struct ChqSolverOptions {
  size_t max_iter;
  double tol_i;
  double tol_residual;
  double eta0;
} ChqSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *chq_last_error(void);

// # Safety
// `out` must point to writable memory for one `ChqConstants`.
enum ChqStatus chq_constants(struct ChqParams p, struct ChqConstants *out);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum ChqStatus chq_grid_new(uint32_t n,
                            double r_min,
                            double r_max,
                            size_t nodes,
                            struct ChqGrid **out);

// # Safety
// `grid` must come from `chq_grid_new` and not be freed twice; null is ignored.
void chq_grid_free(struct ChqGrid *grid);

// Number of nodes, or 0 for a null grid.
//
// # Safety
// `grid` must be null or a live grid handle.
size_t chq_grid_len(const struct ChqGrid *grid);

// Copies the node radii into `out`, which holds `len` doubles.
//
// # Safety
// `grid` must be a live handle and `out` valid for `len` writes.
enum ChqStatus chq_grid_nodes(const struct ChqGrid *grid, double *out, size_t len);

// # Safety
// `grid` must be live, `values` valid for `len` reads, `out` a handle slot.
enum ChqStatus chq_field_new(const struct ChqGrid *grid,
                             const double *values,
                             size_t len,
                             struct ChqField **out);

// Samples the bubble U_ε (σ = 0) or its N = 4 perturbation.
//
// # Safety
// `grid` must be live and `out` a handle slot.
enum ChqStatus chq_field_bubble(const struct ChqGrid *grid,
                                double eps,
                                double sigma,
                                struct ChqField **out);

// # Safety
// `field` must come from this library and not be freed twice; null is ignored.
void chq_field_free(struct ChqField *field);

// # Safety
// `field` must be null or a live field handle.
size_t chq_field_len(const struct ChqField *field);

// # Safety
// `field` must be live and `out` valid for `len` writes.
enum ChqStatus chq_field_values(const struct ChqField *field, double *out, size_t len);

// # Safety
// `grid` must be live and `out` a handle slot.
enum ChqStatus chq_kernel_build(const struct ChqGrid *grid, double alpha, struct ChqKernel **out);

// # Safety
// `kernel` must come from `chq_kernel_build` and not be freed twice; null is ignored.
void chq_kernel_free(struct ChqKernel *kernel);

// # Safety
// Handles must be live and `out` writable.
enum ChqStatus chq_energy_breakdown(const struct ChqField *field,
                                    const struct ChqKernel *kernel,
                                    struct ChqParams p,
                                    struct ChqBreakdown *out);

// Scales the field onto the Nehari manifold; writes t and a new handle.
//
// # Safety
// Handles must be live; `t` and `out` writable.
enum ChqStatus chq_nehari_project(const struct ChqField *field,
                                  const struct ChqKernel *kernel,
                                  struct ChqParams p,
                                  double *t,
                                  struct ChqField **out);

// # Safety
// `field` must be live and `out` a handle slot.
enum ChqStatus chq_schwarz_rearrange(const struct ChqField *field, struct ChqField **out);

// Bubble-ray bound on the Nehari level. `s_exponent` is used for N = 4;
// pass NaN for the default.
//
// # Safety
// Handles must be live, `eps` valid for `eps_len` reads, `out` writable.
enum ChqStatus chq_verify_nehari_level(const struct ChqGrid *grid,
                                       const struct ChqKernel *kernel,
                                       struct ChqParams p,
                                       const double *eps,
                                       size_t eps_len,
                                       double s_exponent,
                                       struct ChqLevelReport *out);

// Normalized-bubble bound on the constraint level; arguments as for
// `chq_verify_nehari_level`.
//
// # Safety
// Handles must be live, `eps` valid for `eps_len` reads, `out` writable.
enum ChqStatus chq_verify_constraint_level(const struct ChqGrid *grid,
                                           const struct ChqKernel *kernel,
                                           struct ChqParams p,
                                           const double *eps,
                                           size_t eps_len,
                                           double s_exponent,
                                           struct ChqLevelReport *out);

// Default descent options.
struct ChqSolverOptions chq_solver_options_default(void);

// Descent for the Nehari level from `start`; writes the minimizer handle and
// the report.
//
// # Safety
// Handles must be live; `out` and `report` writable.
enum ChqStatus chq_minimize_nehari(const struct ChqKernel *kernel,
                                   const struct ChqField *start,
                                   struct ChqParams p,
                                   struct ChqSolverOptions opts,
                                   struct ChqField **out,
                                   struct ChqLevelReport *report);

// # Safety
// `out` must be writable.
enum ChqStatus chq_subadditivity_gap(double lambda, uint32_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHOQUARD_H */
