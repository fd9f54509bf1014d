#ifndef ORIENTPIPE_H
#define ORIENTPIPE_H

/* Generated by cbindgen from orientpipe-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. Anything other than `Ok` leaves out-parameters untouched.
typedef enum OrientpipeStatus {
  OrientpipeStatus_Ok = 0,
  OrientpipeStatus_NullPointer = 1,
  OrientpipeStatus_InvalidArgument = 2,
  // Degenerate geometry or statistics (singular configuration, point at
  // infinity, undefined circular mean).
  OrientpipeStatus_Degenerate = 3,
  OrientpipeStatus_DimensionMismatch = 4,
} OrientpipeStatus;

// Decoding rule for probability vectors.
typedef enum OrientpipeDecodeMode {
  // Center of the most probable bin, ties toward the lowest index.
  OrientpipeDecodeMode_ArgmaxCenter = 0,
  // Probability-weighted circular mean of bin centers.
  OrientpipeDecodeMode_CircularMean = 1,
} OrientpipeDecodeMode;

// Opaque handle to a cyclic bin set.
typedef struct OrientpipeBins {
  uint8_t _private[0];
} OrientpipeBins;

// Opaque handle to a 3x3 projective map.
typedef struct OrientpipeHomography {
  uint8_t _private[0];
} OrientpipeHomography;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a NUL-terminated static string.
const char *orientpipe_version(void);

// Short description of a status code.
const char *orientpipe_status_message(enum OrientpipeStatus status);

// Create a bin set with `k` equal cyclic bins (`k >= 2`).
//
// # Safety
// `out` must be a valid pointer; the returned handle must be released with
// `orientpipe_bins_free`.
enum OrientpipeStatus orientpipe_bins_new(size_t k, struct OrientpipeBins **out);

// Release a bin set handle. Null is a no-op.
//
// # Safety
// `bins` must have come from `orientpipe_bins_new` and not be used after.
void orientpipe_bins_free(struct OrientpipeBins *bins);

// Number of bins.
//
// # Safety
// `bins` must be a live handle.
size_t orientpipe_bins_k(const struct OrientpipeBins *bins);

// Center angle of a 1-based bin index, in degrees.
//
// # Safety
// Pointers must be valid.
enum OrientpipeStatus orientpipe_bins_center(const struct OrientpipeBins *bins,
                                             size_t bin,
                                             double *out_deg);

// 1-based bin index of an angle; boundary angles belong to the upper bin.
//
// # Safety
// Pointers must be valid.
enum OrientpipeStatus orientpipe_bin_of(const struct OrientpipeBins *bins,
                                        double alpha_deg,
                                        size_t *out_bin);

// Squared shortest angular difference divided by 90 (the soft-label
// distance).
double orientpipe_cyclic_distance(double alpha_deg, double r_deg);

// Absolute angular error on the shortest arc, in `[0, 180]` degrees.
double orientpipe_angular_abs_error(double pred_deg, double truth_deg);

// Soft-label distribution for an angle; writes `k` probabilities to `out`.
//
// # Safety
// `out` must point to at least `k` writable doubles.
enum OrientpipeStatus orientpipe_soft_labels(const struct OrientpipeBins *bins,
                                             double alpha_deg,
                                             double *out);

// Cross-entropy `-sum_j y_j ln(x_j)` between a predicted distribution `x`
// and soft labels `y`, both of length `len`.
//
// # Safety
// `x` and `y` must point to `len` readable doubles.
enum OrientpipeStatus orientpipe_cyclic_cross_entropy(const double *x,
                                                      const double *y,
                                                      size_t len,
                                                      double *out);

// Gradient of the cyclic loss with respect to raw logits:
// `softmax(logits) - y`. Writes `len` values to `out`.
//
// # Safety
// All arrays must hold `len` doubles.
enum OrientpipeStatus orientpipe_cyclic_cross_entropy_grad(const double *logits,
                                                           const double *y,
                                                           size_t len,
                                                           double *out);

// Decode a probability vector over the bins back to an angle in degrees.
//
// # Safety
// `probs` must hold `len` doubles matching the bin count.
enum OrientpipeStatus orientpipe_decode_angle(const struct OrientpipeBins *bins,
                                              const double *probs,
                                              size_t len,
                                              enum OrientpipeDecodeMode mode,
                                              double *out_deg);

// Interpolate along the shortest arc from `a` to `b` at fraction `t` in
// `[0, 1]`. `out_antipodal` (optional) is set to 1 when the inputs are
// exactly 180 degrees apart and the counterclockwise convention was used.
//
// # Safety
// `out_deg` must be valid; `out_antipodal` may be null.
enum OrientpipeStatus orientpipe_circular_interpolate(double a_deg,
                                                      double b_deg,
                                                      double t,
                                                      double *out_deg,
                                                      int32_t *out_antipodal);

// Heading (azimuth of the device-forward axis) from intrinsic Z-Y-X Euler
// angles in degrees.
//
// # Safety
// `out_deg` must be valid.
enum OrientpipeStatus orientpipe_euler_to_heading(double roll_x_deg,
                                                  double pitch_y_deg,
                                                  double yaw_z_deg,
                                                  double *out_deg);

// Estimate the projective map from `n >= 4` point pairs given as
// interleaved x,y arrays (normalized DLT).
//
// # Safety
// `src_xy` and `dst_xy` must hold `2 * n` doubles; the returned handle must
// be released with `orientpipe_homography_free`.
enum OrientpipeStatus orientpipe_homography_estimate(const double *src_xy,
                                                     const double *dst_xy,
                                                     size_t n,
                                                     struct OrientpipeHomography **out);

// Wrap a row-major 3x3 matrix (bottom-right entry must be nonzero).
//
// # Safety
// `m` must hold 9 doubles; release the handle with
// `orientpipe_homography_free`.
enum OrientpipeStatus orientpipe_homography_from_row_major(const double *m,
                                                           struct OrientpipeHomography **out);

// Release a homography handle. Null is a no-op.
//
// # Safety
// `h` must have come from this library and not be used after.
void orientpipe_homography_free(struct OrientpipeHomography *h);

// Copy the normalized row-major matrix into `out` (9 doubles).
//
// # Safety
// Pointers must be valid.
enum OrientpipeStatus orientpipe_homography_row_major(const struct OrientpipeHomography *h,
                                                      double *out);

// Apply the map to a point.
//
// # Safety
// Pointers must be valid.
enum OrientpipeStatus orientpipe_homography_apply(const struct OrientpipeHomography *h,
                                                  double x,
                                                  double y,
                                                  double *out_x,
                                                  double *out_y);

// Inverse map as a new handle.
//
// # Safety
// Pointers must be valid; release the new handle with
// `orientpipe_homography_free`.
enum OrientpipeStatus orientpipe_homography_inverse(const struct OrientpipeHomography *h,
                                                    struct OrientpipeHomography **out);

// Convert a raw absolute orientation to the reference-camera frame using
// an image-to-field homography and the player's image position.
//
// # Safety
// Pointers must be valid.
enum OrientpipeStatus orientpipe_compensate_angle(const struct OrientpipeHomography *h_if,
                                                  double alpha_raw_deg,
                                                  double image_x,
                                                  double image_y,
                                                  double *out_deg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORIENTPIPE_H */
