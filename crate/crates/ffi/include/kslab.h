#ifndef KSLAB_H
#define KSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Boundary conditions for interval grids.
 */
typedef enum KslabBoundary {
  KSLAB_BOUNDARY_NAVIER = 0,
  KSLAB_BOUNDARY_DIRICHLET = 1,
} KslabBoundary;

/**
 * Blow-up case for the closed-form certificate bound.
 */
typedef enum KslabCase {
  KSLAB_CASE_STRICT = 0,
  KSLAB_CASE_ZERO = 1,
  KSLAB_CASE_NEGATIVE = 2,
} KslabCase;

/**
 * Outcome tag of a trajectory.
 */
typedef enum KslabOutcome {
  KSLAB_OUTCOME_COMPLETED = 0,
  KSLAB_OUTCOME_BLOW_UP = 10,
  KSLAB_OUTCOME_NUMERICAL_FAILURE = 20,
} KslabOutcome;

/**
 * Result of every exported call.
 */
typedef enum KslabStatus {
  KSLAB_STATUS_OK = 0,
  KSLAB_STATUS_NULL_POINTER = 1,
  KSLAB_STATUS_INVALID_ARGUMENT = 2,
  KSLAB_STATUS_CONFIG = 3,
  KSLAB_STATUS_NUMERICAL = 4,
  KSLAB_STATUS_IO = 5,
  KSLAB_STATUS_BUFFER_TOO_SMALL = 6,
  KSLAB_STATUS_PANIC = 7,
} KslabStatus;

typedef struct KslabField KslabField;

typedef struct KslabGrid KslabGrid;

typedef struct KslabModel KslabModel;

typedef struct KslabTrajectory KslabTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t kslab_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kslab_version(void);

/**
 * Periodic cube [0, extent)^dim with `points` nodes per axis.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum KslabStatus kslab_grid_periodic(size_t dim,
                                     double extent,
                                     size_t points,
                                     struct KslabGrid **out);

/**
 * Interval (-half_length, half_length) with `points` nodes including the ends.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum KslabStatus kslab_grid_interval(double half_length,
                                     size_t points,
                                     enum KslabBoundary bc,
                                     struct KslabGrid **out);

/**
 * Number of grid nodes.
 *
 * # Safety
 * `grid` must be a live handle; `out` must be writable.
 */
enum KslabStatus kslab_grid_len(const struct KslabGrid *grid, size_t *out);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void kslab_grid_free(struct KslabGrid *grid);

/**
 * Copies `len` values (row-major, last axis fastest) into a new field.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum KslabStatus kslab_field_new(const struct KslabGrid *grid,
                                 const double *values,
                                 size_t len,
                                 struct KslabField **out);

/**
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum KslabStatus kslab_field_len(const struct KslabField *field, size_t *out);

/**
 * Copies the values into `out`, which must hold at least the field length.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum KslabStatus kslab_field_values(const struct KslabField *field, double *out, size_t len);

/**
 * ‖v‖_p by quadrature; pass `INFINITY` for the sup norm.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum KslabStatus kslab_field_norm(const struct KslabField *field, double p, double *out);

/**
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void kslab_field_free(struct KslabField *field);

/**
 * Model of the named family (`"kse_ibvp"`, `"mkse"`, `"cahn_hilliard"`, ...)
 * with unit drift along every axis. For `mkse`, `m` is the leading order 2l.
 *
 * # Safety
 * `family` must be a NUL-terminated string; `out` must be writable.
 */
enum KslabStatus kslab_model_new(const char *family,
                                 uint32_t m,
                                 double p,
                                 size_t dim,
                                 struct KslabModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void kslab_model_free(struct KslabModel *model);

/**
 * Integrates to `t_end` with step `dt`, recording `sup_norm` and `l2`.
 * Blow-up and numerical failure are outcomes, not errors.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum KslabStatus kslab_integrate(const struct KslabModel *model,
                                 const struct KslabField *initial,
                                 double dt,
                                 double t_end,
                                 double threshold,
                                 struct KslabTrajectory **out);

/**
 * Outcome and, for blow-up, the time bracket (NaN otherwise).
 *
 * # Safety
 * `traj` must be a live handle; output pointers must be writable.
 */
enum KslabStatus kslab_trajectory_outcome(const struct KslabTrajectory *traj,
                                          enum KslabOutcome *outcome,
                                          double *lower,
                                          double *upper);

/**
 * Number of recorded samples.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum KslabStatus kslab_trajectory_len(const struct KslabTrajectory *traj, size_t *out);

/**
 * Copies a series (`"t"` for the time axis, otherwise a monitor name).
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must point to `len` writable doubles.
 */
enum KslabStatus kslab_trajectory_series(const struct KslabTrajectory *traj,
                                         const char *name,
                                         double *out,
                                         size_t len);

/**
 * Last finite state as a new field handle.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum KslabStatus kslab_trajectory_final(const struct KslabTrajectory *traj,
                                        struct KslabField **out);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void kslab_trajectory_free(struct KslabTrajectory *traj);

/**
 * One-dimensional kernel on [-half_width, half_width) with its mass and
 * fitted decay exponent.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum KslabStatus kslab_kernel_decay(uint32_t m,
                                    double half_width,
                                    size_t points,
                                    double *mass,
                                    double *alpha);

/**
 * Upper bound on the blow-up time of J' ≥ κ²J² + H. `a` is ignored for the
 * zero case.
 *
 * # Safety
 * `out` must be writable.
 */
enum KslabStatus kslab_t_infinity(enum KslabCase kind,
                                  double a,
                                  double kappa,
                                  double j0,
                                  double *out);

/**
 * Critical exponent 1 + 2(2m-1)/N as a double.
 *
 * # Safety
 * `out` must be writable.
 */
enum KslabStatus kslab_critical_exponent(uint32_t m, uint32_t n, double *out);

/**
 * Runs a configuration text (same format as the CLI) into `out_dir`.
 * `exit_code` receives the run's exit code (0, 10 or 20).
 *
 * # Safety
 * Strings must be NUL-terminated; `exit_code` must be writable.
 */
enum KslabStatus kslab_run_config(const char *config, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSLAB_H */
