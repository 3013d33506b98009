#ifndef BILTS_H
#define BILTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BiltsStatus {
  BILTS_STATUS_OK = 0,
  BILTS_STATUS_NULL_POINTER = 1,
  BILTS_STATUS_INVALID_ARGUMENT = 2,
  BILTS_STATUS_IO = 3,
  BILTS_STATUS_PARSE = 4,
  BILTS_STATUS_SCHEMA = 5,
  // Singular decomposition, degenerate progress, rotation near pi and
  // similar numerical failures.
  BILTS_STATUS_NUMERIC = 6,
  BILTS_STATUS_TOO_SHORT = 7,
  BILTS_STATUS_BUFFER_TOO_SMALL = 8,
  BILTS_STATUS_PANIC = 9,
} BiltsStatus;

// Progress variable used for reparameterization.
typedef enum BiltsProgress {
  BILTS_PROGRESS_ARCLENGTH = 0,
  BILTS_PROGRESS_ANGLE = 1,
  BILTS_PROGRESS_SCREW_PATH = 2,
} BiltsProgress;

// Opaque pose sequence sampled at a constant period.
typedef struct BiltsTrajectory BiltsTrajectory;

// Comparison settings. `progress` holds a `BiltsProgress` value.
typedef struct BiltsParams {
  uint32_t progress;
  // Length scale in metres.
  double l;
  // Descriptor window in progress units.
  double xi;
  size_t n_out;
  // Smoothing width in samples.
  double sigma;
  // Regularized frames with rotational alignment.
  bool plus;
} BiltsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Defaults: screw-path progress, `l = 0.5`, `xi = 0.06`, 50 samples,
// smoothing width 2, regularized.
struct BiltsParams bilts_params_default(void);

// Builds a trajectory from `n` rows of `px py pz qw qx qy qz`.
//
// # Safety
// `data` must point to `7 * n` readable doubles and `out` to writable
// storage for one handle.
enum BiltsStatus bilts_trajectory_from_poses(const double *data,
                                             size_t n,
                                             double dt,
                                             struct BiltsTrajectory **out);

// Builds a trajectory from `n` row-major 4x4 homogeneous matrices.
//
// # Safety
// `data` must point to `16 * n` readable doubles and `out` to writable
// storage for one handle.
enum BiltsStatus bilts_trajectory_from_matrices(const double *data,
                                                size_t n,
                                                double dt,
                                                struct BiltsTrajectory **out);

// Reads a pose CSV file with optional JSON sidecar.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable storage for one
// handle.
enum BiltsStatus bilts_trajectory_load_csv(const char *path, struct BiltsTrajectory **out);

// Number of poses, or 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t bilts_trajectory_len(const struct BiltsTrajectory *traj);

// Releases a handle. Null is ignored.
//
// # Safety
// `traj` must be null or a handle not yet freed.
void bilts_trajectory_free(struct BiltsTrajectory *traj);

// Trajectory-level distance between two handles.
//
// # Safety
// `a` and `b` must be live handles, `params` readable and `out` writable.
enum BiltsStatus bilts_distance(const struct BiltsTrajectory *a,
                                const struct BiltsTrajectory *b,
                                const struct BiltsParams *params,
                                double *out);

// Distances between consecutive descriptors.
//
// `*len` receives the signal length. When `buffer` is null or `capacity` is
// smaller than the signal, nothing is copied and `BILTS_STATUS_BUFFER_TOO_SMALL`
// is returned.
//
// # Safety
// `traj` must be a live handle, `params` readable, `len` writable and
// `buffer` null or writable for `capacity` doubles.
enum BiltsStatus bilts_shape_change_signal(const struct BiltsTrajectory *traj,
                                           const struct BiltsParams *params,
                                           double *buffer,
                                           size_t capacity,
                                           size_t *len);

// Message of the last failure on this thread, or null after a success.
// Valid until the next call into this library on the same thread.
const char *bilts_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bilts_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BILTS_H */
