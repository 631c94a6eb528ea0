#ifndef BO_FFI_H
#define BO_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BoStatus {
  BO_STATUS_OK = 0,
  BO_STATUS_NULL_POINTER = 1,
  BO_STATUS_INVALID_ARGUMENT = 2,
  BO_STATUS_GRID_MISMATCH = 3,
  BO_STATUS_NUMERICAL_ABORT = 4,
  BO_STATUS_BUFFER_TOO_SMALL = 5,
  BO_STATUS_PANIC = 6,
} BoStatus;

typedef struct BoField BoField;

typedef struct BoGrid BoGrid;

typedef struct BoTrajectory BoTrajectory;

/*
 Conserved quantities of a field.
 */
typedef struct BoInvariants {
  double i1;
  double i2;
  double energy;
  double l1;
} BoInvariants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *bo_last_error_message(void);

/*
 # Safety
 `out` must be valid for writes.
 */
enum BoStatus bo_grid_new(uintptr_t n, double length, struct BoGrid **out);

/*
 # Safety
 `grid` must come from `bo_grid_new` and not be freed twice.
 */
void bo_grid_free(struct BoGrid *grid);

/*
 Number of grid points, or 0 for a null handle.

 # Safety
 `grid` must be null or a live handle.
 */
uintptr_t bo_grid_points(const struct BoGrid *grid);

/*
 Copies `len` samples into a new field on `grid`.

 # Safety
 `samples` must point to `len` readable doubles; `out` must be valid for
 writes.
 */
enum BoStatus bo_field_new(const struct BoGrid *grid,
                           const double *samples,
                           uintptr_t len,
                           struct BoField **out);

/*
 # Safety
 `field` must come from this library and not be freed twice.
 */
void bo_field_free(struct BoField *field);

/*
 Copies the samples into `buf`, which must hold at least the grid size.

 # Safety
 `buf` must point to `cap` writable doubles.
 */
enum BoStatus bo_field_samples(const struct BoField *field, double *buf, uintptr_t cap);

/*
 Hilbert transform, symbol `-i sgn(xi)`.

 # Safety
 `field` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_hilbert(const struct BoField *field, struct BoField **out);

/*
 Spectral derivative.

 # Safety
 As for `bo_hilbert`.
 */
enum BoStatus bo_deriv(const struct BoField *field, struct BoField **out);

/*
 `D^s`, symbol `|xi|^s`, for `s` in `[0, 2]`.

 # Safety
 As for `bo_hilbert`.
 */
enum BoStatus bo_frac_deriv(const struct BoField *field, double s, struct BoField **out);

/*
 # Safety
 `field` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_invariants(const struct BoField *field, struct BoInvariants *out);

/*
 `integral phi'(x/lambda) (u^2 + (D^{1/2}u)^2)`.

 # Safety
 `field` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_local_energy(const struct BoField *field, double lambda, double *out);

/*
 Starts a trajectory at `(field, t0)`; `dt` must satisfy
 `0 < dt <= 1/max|xi|`.

 # Safety
 `field` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_trajectory_new(const struct BoField *field,
                                double t0,
                                double dt,
                                bool dealias,
                                struct BoTrajectory **out);

/*
 # Safety
 `traj` must come from `bo_trajectory_new` and not be freed twice.
 */
void bo_trajectory_free(struct BoTrajectory *traj);

/*
 Advances `steps` steps. On a numerical abort the trajectory keeps its
 last finite state.

 # Safety
 `traj` must be a live handle.
 */
enum BoStatus bo_trajectory_advance(struct BoTrajectory *traj, uint64_t steps);

/*
 # Safety
 `traj` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_trajectory_time(const struct BoTrajectory *traj, double *out);

/*
 Copy of the current solution as a new field.

 # Safety
 `traj` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_trajectory_field(const struct BoTrajectory *traj, struct BoField **out);

/*
 Relative residual of `A / (1 + B^2 (x - x0)^2)` travelling at `speed`.

 # Safety
 `grid` must be a live handle; `out` must be valid for writes.
 */
enum BoStatus bo_profile_residual(const struct BoGrid *grid,
                                  double amplitude,
                                  double scale,
                                  double center,
                                  double speed,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BO_FFI_H */
