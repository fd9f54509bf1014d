//! C ABI over the orientation toolchain: cyclic bins and soft labels, the
//! cyclic cross-entropy loss and gradient, decoding, circular utilities,
//! homography estimation, and camera-pose angle compensation.
//!
//! Handles are opaque; every fallible call returns an [`OrientpipeStatus`]
//! and writes results through out-pointers. The generated header lives at
//! `include/orientpipe.h`.
//!
//! Angle convention: degrees in `[0, 360)`, 0 toward the right goal line,
//! 90 toward the top touchline. Homographies estimated here map source
//! coordinates to destination coordinates of the caller's choosing; the
//! compensation call expects an image-to-field map.

use orientpipe::angles::{
    bin_of, circular_interpolate, cyclic_cross_entropy, cyclic_cross_entropy_grad,
    cyclic_distance, decode_angle, euler_to_heading, soft_labels, AnglesError, BinSet,
    DecodeMode, EulerOrientation, ProbVector, SoftLabels,
};
use orientpipe::eval::angular_abs_error;
use orientpipe::geometry::{
    compensate_angle, estimate_homography, Correspondence, Domain, GeometryError, Homography,
    ImagePoint,
};
use std::os::raw::c_char;

/// Call outcome. Anything other than `Ok` leaves out-parameters untouched.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientpipeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Degenerate geometry or statistics (singular configuration, point at
    /// infinity, undefined circular mean).
    Degenerate = 3,
    DimensionMismatch = 4,
}

/// Opaque handle to a cyclic bin set.
#[repr(C)]
pub struct OrientpipeBins {
    _private: [u8; 0],
}

/// Opaque handle to a 3x3 projective map.
#[repr(C)]
pub struct OrientpipeHomography {
    _private: [u8; 0],
}

/// Decoding rule for probability vectors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientpipeDecodeMode {
    /// Center of the most probable bin, ties toward the lowest index.
    ArgmaxCenter = 0,
    /// Probability-weighted circular mean of bin centers.
    CircularMean = 1,
}

fn status_of_angles(e: &AnglesError) -> OrientpipeStatus {
    match e {
        AnglesError::DimensionMismatch(_, _) => OrientpipeStatus::DimensionMismatch,
        AnglesError::DegenerateMean(_) | AnglesError::GimbalProjectionDegenerate => {
            OrientpipeStatus::Degenerate
        }
        _ => OrientpipeStatus::InvalidArgument,
    }
}

fn status_of_geometry(e: &GeometryError) -> OrientpipeStatus {
    match e {
        GeometryError::TooFewPoints(_) | GeometryError::InvalidCoordinate(_) => {
            OrientpipeStatus::InvalidArgument
        }
        _ => OrientpipeStatus::Degenerate,
    }
}

unsafe fn bins_ref<'a>(bins: *const OrientpipeBins) -> Option<&'a BinSet> {
    (bins as *const BinSet).as_ref()
}

unsafe fn homography_ref<'a>(h: *const OrientpipeHomography) -> Option<&'a Homography> {
    (h as *const Homography).as_ref()
}

/// Library version as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn orientpipe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Short description of a status code.
#[no_mangle]
pub extern "C" fn orientpipe_status_message(status: OrientpipeStatus) -> *const c_char {
    let msg: &'static str = match status {
        OrientpipeStatus::Ok => "ok\0",
        OrientpipeStatus::NullPointer => "null pointer argument\0",
        OrientpipeStatus::InvalidArgument => "invalid argument\0",
        OrientpipeStatus::Degenerate => "degenerate configuration\0",
        OrientpipeStatus::DimensionMismatch => "dimension mismatch\0",
    };
    msg.as_ptr() as *const c_char
}

/// Create a bin set with `k` equal cyclic bins (`k >= 2`).
///
/// # Safety
/// `out` must be a valid pointer; the returned handle must be released with
/// `orientpipe_bins_free`.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_bins_new(
    k: usize,
    out: *mut *mut OrientpipeBins,
) -> OrientpipeStatus {
    if out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    match BinSet::new(k) {
        Ok(bins) => {
            *out = Box::into_raw(Box::new(bins)) as *mut OrientpipeBins;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Release a bin set handle. Null is a no-op.
///
/// # Safety
/// `bins` must have come from `orientpipe_bins_new` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_bins_free(bins: *mut OrientpipeBins) {
    if !bins.is_null() {
        drop(Box::from_raw(bins as *mut BinSet));
    }
}

/// Number of bins.
///
/// # Safety
/// `bins` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_bins_k(bins: *const OrientpipeBins) -> usize {
    bins_ref(bins).map_or(0, |b| b.k())
}

/// Center angle of a 1-based bin index, in degrees.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_bins_center(
    bins: *const OrientpipeBins,
    bin: usize,
    out_deg: *mut f64,
) -> OrientpipeStatus {
    let Some(b) = bins_ref(bins) else {
        return OrientpipeStatus::NullPointer;
    };
    if out_deg.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    if bin < 1 || bin > b.k() {
        return OrientpipeStatus::InvalidArgument;
    }
    *out_deg = b.center(bin);
    OrientpipeStatus::Ok
}

/// 1-based bin index of an angle; boundary angles belong to the upper bin.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_bin_of(
    bins: *const OrientpipeBins,
    alpha_deg: f64,
    out_bin: *mut usize,
) -> OrientpipeStatus {
    let Some(b) = bins_ref(bins) else {
        return OrientpipeStatus::NullPointer;
    };
    if out_bin.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    if !alpha_deg.is_finite() {
        return OrientpipeStatus::InvalidArgument;
    }
    *out_bin = bin_of(alpha_deg, b);
    OrientpipeStatus::Ok
}

/// Squared shortest angular difference divided by 90 (the soft-label
/// distance).
#[no_mangle]
pub extern "C" fn orientpipe_cyclic_distance(alpha_deg: f64, r_deg: f64) -> f64 {
    cyclic_distance(alpha_deg, r_deg)
}

/// Absolute angular error on the shortest arc, in `[0, 180]` degrees.
#[no_mangle]
pub extern "C" fn orientpipe_angular_abs_error(pred_deg: f64, truth_deg: f64) -> f64 {
    angular_abs_error(pred_deg, truth_deg)
}

/// Soft-label distribution for an angle; writes `k` probabilities to `out`.
///
/// # Safety
/// `out` must point to at least `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_soft_labels(
    bins: *const OrientpipeBins,
    alpha_deg: f64,
    out: *mut f64,
) -> OrientpipeStatus {
    let Some(b) = bins_ref(bins) else {
        return OrientpipeStatus::NullPointer;
    };
    if out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    if !alpha_deg.is_finite() {
        return OrientpipeStatus::InvalidArgument;
    }
    let y = soft_labels(alpha_deg, b);
    std::ptr::copy_nonoverlapping(y.values().as_ptr(), out, b.k());
    OrientpipeStatus::Ok
}

/// Cross-entropy `-sum_j y_j ln(x_j)` between a predicted distribution `x`
/// and soft labels `y`, both of length `len`.
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_cyclic_cross_entropy(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> OrientpipeStatus {
    if x.is_null() || y.is_null() || out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    let xs = std::slice::from_raw_parts(x, len).to_vec();
    let ys = std::slice::from_raw_parts(y, len).to_vec();
    let xs = match ProbVector::new(xs) {
        Ok(v) => v,
        Err(e) => return status_of_angles(&e),
    };
    let ys = match SoftLabels::new(ys) {
        Ok(v) => v,
        Err(e) => return status_of_angles(&e),
    };
    match cyclic_cross_entropy(&xs, &ys) {
        Ok(v) => {
            *out = v;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Gradient of the cyclic loss with respect to raw logits:
/// `softmax(logits) - y`. Writes `len` values to `out`.
///
/// # Safety
/// All arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_cyclic_cross_entropy_grad(
    logits: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> OrientpipeStatus {
    if logits.is_null() || y.is_null() || out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    let ls = std::slice::from_raw_parts(logits, len);
    if ls.iter().any(|v| !v.is_finite()) {
        return OrientpipeStatus::InvalidArgument;
    }
    let ys = match SoftLabels::new(std::slice::from_raw_parts(y, len).to_vec()) {
        Ok(v) => v,
        Err(e) => return status_of_angles(&e),
    };
    match cyclic_cross_entropy_grad(ls, &ys) {
        Ok(g) => {
            std::ptr::copy_nonoverlapping(g.as_ptr(), out, len);
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Decode a probability vector over the bins back to an angle in degrees.
///
/// # Safety
/// `probs` must hold `len` doubles matching the bin count.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_decode_angle(
    bins: *const OrientpipeBins,
    probs: *const f64,
    len: usize,
    mode: OrientpipeDecodeMode,
    out_deg: *mut f64,
) -> OrientpipeStatus {
    let Some(b) = bins_ref(bins) else {
        return OrientpipeStatus::NullPointer;
    };
    if probs.is_null() || out_deg.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    let xs = match ProbVector::new(std::slice::from_raw_parts(probs, len).to_vec()) {
        Ok(v) => v,
        Err(e) => return status_of_angles(&e),
    };
    let mode = match mode {
        OrientpipeDecodeMode::ArgmaxCenter => DecodeMode::ArgmaxCenter,
        OrientpipeDecodeMode::CircularMean => DecodeMode::CircularMean,
    };
    match decode_angle(&xs, b, mode) {
        Ok(a) => {
            *out_deg = a;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Interpolate along the shortest arc from `a` to `b` at fraction `t` in
/// `[0, 1]`. `out_antipodal` (optional) is set to 1 when the inputs are
/// exactly 180 degrees apart and the counterclockwise convention was used.
///
/// # Safety
/// `out_deg` must be valid; `out_antipodal` may be null.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_circular_interpolate(
    a_deg: f64,
    b_deg: f64,
    t: f64,
    out_deg: *mut f64,
    out_antipodal: *mut i32,
) -> OrientpipeStatus {
    if out_deg.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    match circular_interpolate(a_deg, b_deg, t) {
        Ok(r) => {
            *out_deg = r.angle;
            if !out_antipodal.is_null() {
                *out_antipodal = r.antipodal as i32;
            }
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Heading (azimuth of the device-forward axis) from intrinsic Z-Y-X Euler
/// angles in degrees.
///
/// # Safety
/// `out_deg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_euler_to_heading(
    roll_x_deg: f64,
    pitch_y_deg: f64,
    yaw_z_deg: f64,
    out_deg: *mut f64,
) -> OrientpipeStatus {
    if out_deg.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    if ![roll_x_deg, pitch_y_deg, yaw_z_deg].iter().all(|v| v.is_finite()) {
        return OrientpipeStatus::InvalidArgument;
    }
    match euler_to_heading(&EulerOrientation::new(roll_x_deg, pitch_y_deg, yaw_z_deg)) {
        Ok(h) => {
            *out_deg = h;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_angles(&e),
    }
}

/// Estimate the projective map from `n >= 4` point pairs given as
/// interleaved x,y arrays (normalized DLT).
///
/// # Safety
/// `src_xy` and `dst_xy` must hold `2 * n` doubles; the returned handle must
/// be released with `orientpipe_homography_free`.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_estimate(
    src_xy: *const f64,
    dst_xy: *const f64,
    n: usize,
    out: *mut *mut OrientpipeHomography,
) -> OrientpipeStatus {
    if src_xy.is_null() || dst_xy.is_null() || out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    let src = std::slice::from_raw_parts(src_xy, 2 * n);
    let dst = std::slice::from_raw_parts(dst_xy, 2 * n);
    let pairs: Vec<Correspondence> = (0..n)
        .map(|i| Correspondence::new([src[2 * i], src[2 * i + 1]], [dst[2 * i], dst[2 * i + 1]]))
        .collect();
    match estimate_homography(&pairs, Domain::Image, Domain::Field) {
        Ok(h) => {
            *out = Box::into_raw(Box::new(h)) as *mut OrientpipeHomography;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_geometry(&e),
    }
}

/// Wrap a row-major 3x3 matrix (bottom-right entry must be nonzero).
///
/// # Safety
/// `m` must hold 9 doubles; release the handle with
/// `orientpipe_homography_free`.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_from_row_major(
    m: *const f64,
    out: *mut *mut OrientpipeHomography,
) -> OrientpipeStatus {
    if m.is_null() || out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    let mut v = [0.0; 9];
    v.copy_from_slice(std::slice::from_raw_parts(m, 9));
    match Homography::from_row_major(v, Domain::Image, Domain::Field) {
        Ok(h) => {
            *out = Box::into_raw(Box::new(h)) as *mut OrientpipeHomography;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_geometry(&e),
    }
}

/// Release a homography handle. Null is a no-op.
///
/// # Safety
/// `h` must have come from this library and not be used after.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_free(h: *mut OrientpipeHomography) {
    if !h.is_null() {
        drop(Box::from_raw(h as *mut Homography));
    }
}

/// Copy the normalized row-major matrix into `out` (9 doubles).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_row_major(
    h: *const OrientpipeHomography,
    out: *mut f64,
) -> OrientpipeStatus {
    let Some(h) = homography_ref(h) else {
        return OrientpipeStatus::NullPointer;
    };
    if out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    std::ptr::copy_nonoverlapping(h.to_row_major().as_ptr(), out, 9);
    OrientpipeStatus::Ok
}

/// Apply the map to a point.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_apply(
    h: *const OrientpipeHomography,
    x: f64,
    y: f64,
    out_x: *mut f64,
    out_y: *mut f64,
) -> OrientpipeStatus {
    let Some(h) = homography_ref(h) else {
        return OrientpipeStatus::NullPointer;
    };
    if out_x.is_null() || out_y.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    match h.apply([x, y]) {
        Ok(p) => {
            *out_x = p[0];
            *out_y = p[1];
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_geometry(&e),
    }
}

/// Inverse map as a new handle.
///
/// # Safety
/// Pointers must be valid; release the new handle with
/// `orientpipe_homography_free`.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_homography_inverse(
    h: *const OrientpipeHomography,
    out: *mut *mut OrientpipeHomography,
) -> OrientpipeStatus {
    let Some(h) = homography_ref(h) else {
        return OrientpipeStatus::NullPointer;
    };
    if out.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    match h.inverse() {
        Ok(inv) => {
            *out = Box::into_raw(Box::new(inv)) as *mut OrientpipeHomography;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_geometry(&e),
    }
}

/// Convert a raw absolute orientation to the reference-camera frame using
/// an image-to-field homography and the player's image position.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn orientpipe_compensate_angle(
    h_if: *const OrientpipeHomography,
    alpha_raw_deg: f64,
    image_x: f64,
    image_y: f64,
    out_deg: *mut f64,
) -> OrientpipeStatus {
    let Some(h) = homography_ref(h_if) else {
        return OrientpipeStatus::NullPointer;
    };
    if out_deg.is_null() {
        return OrientpipeStatus::NullPointer;
    }
    if !alpha_raw_deg.is_finite() || !image_x.is_finite() || !image_y.is_finite() {
        return OrientpipeStatus::InvalidArgument;
    }
    match compensate_angle(alpha_raw_deg, ImagePoint::new(image_x, image_y), h) {
        Ok(a) => {
            *out_deg = a;
            OrientpipeStatus::Ok
        }
        Err(e) => status_of_geometry(&e),
    }
}
