//! Cyclic orientation bins, soft labels, the cyclic cross-entropy loss, and
//! circular angle utilities.
//!
//! All angles are degrees in `[0, 360)`; inputs are normalized at every
//! operation boundary. Bin `j` (1-based) covers `[width*(j-1), width*j)` with
//! center `r_j = width*(j-1) + width/2`, so for 12 bins the first sector is
//! `[0, 30)` centered at 15.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnglesError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),
    #[error("circular mean undefined: resultant length {0:e} below 1e-9")]
    DegenerateMean(f64),
    #[error("torso normal projects to a near-zero horizontal component")]
    GimbalProjectionDegenerate,
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
}

/// Normalize an angle in degrees to `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a % 360.0;
    let r = if r < 0.0 { r + 360.0 } else { r };
    // `r + 360.0` can round up to exactly 360 for tiny negative inputs.
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Shortest absolute angular difference in degrees, in `[0, 180]`.
pub fn shortest_arc_deg(a: f64, b: f64) -> f64 {
    let d = (normalize_deg(a) - normalize_deg(b)).abs();
    d.min(360.0 - d)
}

/// A set of `k` equal cyclic orientation bins over the full circle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSet {
    k: usize,
    width: f64,
    centers: Vec<f64>,
}

impl BinSet {
    /// Build `k` bins of width `360/k` degrees. Any `k >= 2` is accepted;
    /// 12 and 24 are the configurations used throughout the toolchain.
    pub fn new(k: usize) -> Result<Self, AnglesError> {
        if k < 2 {
            return Err(AnglesError::InvalidBinCount(k));
        }
        let width = 360.0 / k as f64;
        let centers = (1..=k).map(|j| width * (j - 1) as f64 + width / 2.0).collect();
        Ok(Self { k, width, centers })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Center angle of a 1-based bin index.
    pub fn center(&self, bin: usize) -> f64 {
        assert!(bin >= 1 && bin <= self.k, "bin index {bin} out of 1..={}", self.k);
        self.centers[bin - 1]
    }
}

/// Ground-truth probability distribution over orientation bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SoftLabels(Vec<f64>);

impl SoftLabels {
    pub fn new(y: Vec<f64>) -> Result<Self, AnglesError> {
        validate_distribution(&y, false)?;
        Ok(Self(y))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One-hot distribution at a 1-based bin index.
    pub fn one_hot(bin: usize, k: usize) -> Result<Self, AnglesError> {
        if bin < 1 || bin > k {
            return Err(AnglesError::ParameterOutOfRange(format!(
                "one-hot bin {bin} outside 1..={k}"
            )));
        }
        let mut y = vec![0.0; k];
        y[bin - 1] = 1.0;
        Ok(Self(y))
    }
}

impl TryFrom<Vec<f64>> for SoftLabels {
    type Error = AnglesError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SoftLabels> for Vec<f64> {
    fn from(s: SoftLabels) -> Self {
        s.0
    }
}

/// Model output distribution (post-softmax), strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(x: Vec<f64>) -> Result<Self, AnglesError> {
        validate_distribution(&x, true)?;
        Ok(Self(x))
    }

    /// Softmax of raw logits; always a valid distribution.
    pub fn from_logits(logits: &[f64]) -> Self {
        Self(softmax(logits))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn validate_distribution(v: &[f64], strictly_positive: bool) -> Result<(), AnglesError> {
    if v.is_empty() {
        return Err(AnglesError::InvalidDistribution("empty vector".into()));
    }
    for (i, &p) in v.iter().enumerate() {
        if !p.is_finite() {
            return Err(AnglesError::InvalidDistribution(format!("entry {i} not finite")));
        }
        if strictly_positive && p <= 0.0 {
            return Err(AnglesError::InvalidDistribution(format!("entry {i} = {p} not > 0")));
        }
        if !strictly_positive && p < 0.0 {
            return Err(AnglesError::InvalidDistribution(format!("entry {i} = {p} negative")));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AnglesError::InvalidDistribution(format!("sums to {sum}, not 1")));
    }
    Ok(())
}

/// Gyroscope sample as intrinsic Z-Y-X Euler angles in degrees, each
/// normalized to `[-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerOrientation {
    pub roll_x: f64,
    pub pitch_y: f64,
    pub yaw_z: f64,
}

impl EulerOrientation {
    pub fn new(roll_x: f64, pitch_y: f64, yaw_z: f64) -> Self {
        Self {
            roll_x: normalize_signed_deg(roll_x),
            pitch_y: normalize_signed_deg(pitch_y),
            yaw_z: normalize_signed_deg(yaw_z),
        }
    }
}

/// Normalize an angle in degrees to `[-180, 180]`.
pub fn normalize_signed_deg(a: f64) -> f64 {
    let r = normalize_deg(a);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Cyclic distance between two angles: squared shortest arc divided by 90.
///
/// The divisor is part of the label definition (it sets the soft-label
/// temperature), so the result is in squared-degrees-over-90, not degrees.
/// Maximum is `180^2 / 90 = 360` at antipodal inputs.
pub fn cyclic_distance(alpha_deg: f64, r_deg: f64) -> f64 {
    let d = shortest_arc_deg(alpha_deg, r_deg);
    d * d / 90.0
}

/// Soft labels for a ground-truth angle: `y_j = exp(-phi(a, r_j)) / sum_k exp(-phi(a, r_k))`.
///
/// Computed with max-subtraction; the distances reach 360 and bare
/// `exp(-360)` would underflow to zero in single precision.
pub fn soft_labels(alpha_deg: f64, bins: &BinSet) -> SoftLabels {
    let neg_phi: Vec<f64> = bins
        .centers()
        .iter()
        .map(|&r| -cyclic_distance(alpha_deg, r))
        .collect();
    SoftLabels(stable_normalized_exp(&neg_phi))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    stable_normalized_exp(logits)
}

fn stable_normalized_exp(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy `-sum_j y_j ln(x_j)` between a predicted distribution and
/// soft labels.
pub fn cyclic_cross_entropy(x: &ProbVector, y: &SoftLabels) -> Result<f64, AnglesError> {
    if x.len() != y.len() {
        return Err(AnglesError::DimensionMismatch(x.len(), y.len()));
    }
    Ok(x.values()
        .iter()
        .zip(y.values())
        .map(|(&xj, &yj)| if yj == 0.0 { 0.0 } else { -yj * xj.ln() })
        .sum())
}

/// Gradient of `cyclic_cross_entropy(softmax(logits), y)` with respect to the
/// logits: `softmax(logits) - y`.
pub fn cyclic_cross_entropy_grad(logits: &[f64], y: &SoftLabels) -> Result<Vec<f64>, AnglesError> {
    if logits.len() != y.len() {
        return Err(AnglesError::DimensionMismatch(logits.len(), y.len()));
    }
    let p = softmax(logits);
    Ok(p.iter().zip(y.values()).map(|(&pj, &yj)| pj - yj).collect())
}

/// 1-based bin index of an angle. A boundary angle belongs to the upper bin,
/// so 30 degrees falls in bin 2 of a 12-bin set.
pub fn bin_of(alpha_deg: f64, bins: &BinSet) -> usize {
    let a = normalize_deg(alpha_deg);
    let j = (a / bins.width()).floor() as usize + 1;
    j.min(bins.k())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMode {
    /// Center of the most probable bin; ties break toward the lowest index.
    ArgmaxCenter,
    /// Circular mean of bin centers weighted by probability.
    CircularMean,
}

/// Decode a distribution over bins back to an angle in `[0, 360)`.
pub fn decode_angle(x: &ProbVector, bins: &BinSet, mode: DecodeMode) -> Result<f64, AnglesError> {
    if x.len() != bins.k() {
        return Err(AnglesError::DimensionMismatch(x.len(), bins.k()));
    }
    match mode {
        DecodeMode::ArgmaxCenter => {
            let mut best = 0;
            for (j, &p) in x.values().iter().enumerate() {
                if p > x.values()[best] {
                    best = j;
                }
            }
            Ok(bins.center(best + 1))
        }
        DecodeMode::CircularMean => {
            let (mut s, mut c) = (0.0, 0.0);
            for (&p, &r) in x.values().iter().zip(bins.centers()) {
                s += p * r.to_radians().sin();
                c += p * r.to_radians().cos();
            }
            let resultant = (s * s + c * c).sqrt();
            if resultant < 1e-9 {
                return Err(AnglesError::DegenerateMean(resultant));
            }
            Ok(normalize_deg(s.atan2(c).to_degrees()))
        }
    }
}

/// Result of a circular interpolation; `antipodal` flags inputs exactly 180
/// degrees apart, where the arc choice is a convention (counterclockwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub angle: f64,
    pub antipodal: bool,
}

/// Interpolate along the shortest arc from `a` to `b`; `t = 0` gives `a`,
/// `t = 1` gives `b`.
pub fn circular_interpolate(a_deg: f64, b_deg: f64, t: f64) -> Result<Interpolated, AnglesError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AnglesError::ParameterOutOfRange(format!("t = {t} outside [0, 1]")));
    }
    let a = normalize_deg(a_deg);
    let b = normalize_deg(b_deg);
    let diff = normalize_deg(b - a);
    let (delta, antipodal) = if diff == 180.0 {
        (180.0, true)
    } else if diff > 180.0 {
        (diff - 360.0, false)
    } else {
        (diff, false)
    };
    Ok(Interpolated {
        angle: normalize_deg(a + t * delta),
        antipodal,
    })
}

/// Project the device-forward torso normal onto the horizontal plane and
/// return its azimuth in degrees `[0, 360)`.
///
/// Convention: intrinsic Z-Y-X rotation (yaw, then pitch, then roll) applied
/// to the device +X axis. The convention is declared in exported dataset
/// manifests so device data recorded under a different mounting can be
/// remapped before ingestion.
pub fn euler_to_heading(e: &EulerOrientation) -> Result<f64, AnglesError> {
    let rot = nalgebra::Rotation3::from_euler_angles(
        e.roll_x.to_radians(),
        e.pitch_y.to_radians(),
        e.yaw_z.to_radians(),
    );
    let forward = rot * nalgebra::Vector3::x();
    let horiz = (forward.x * forward.x + forward.y * forward.y).sqrt();
    if horiz < 1e-6 {
        return Err(AnglesError::GimbalProjectionDegenerate);
    }
    Ok(normalize_deg(forward.y.atan2(forward.x).to_degrees()))
}

/// Human-readable description of the Euler and angle conventions, embedded in
/// dataset manifests.
pub const CONVENTION_NOTE: &str = "angles in degrees [0,360), 0=right touchline direction, 90=top, \
     counterclockwise in field view; Euler = intrinsic Z-Y-X (yaw,pitch,roll), torso normal = device +X";
