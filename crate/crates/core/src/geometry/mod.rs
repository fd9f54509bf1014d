//! Coordinate domains, planar homographies, and camera-pose angle
//! compensation.
//!
//! Three coordinate systems are fused:
//!
//! * **image** — video-frame pixels, x rightward, y downward;
//! * **geo** — wearable-sensor latitude/longitude in degrees;
//! * **field** — a fixed 2D pitch in meters, origin at the top-left corner,
//!   x rightward along the top touchline, y downward.
//!
//! Field-plane directions use the broadcast-view convention: 0 degrees points
//! toward the right goal line, 90 toward the top touchline, counterclockwise
//! as drawn. Since field y grows downward, the angle of a vector `(dx, dy)`
//! is `atan2(-dy, dx)`.

mod dlt;

pub use dlt::estimate_homography;

use crate::angles::normalize_deg;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("need at least 4 correspondences, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate correspondence configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("point maps to infinity (homogeneous scale below 1e-12)")]
    PointAtInfinity,
    #[error("apparent zero-vector collapses to below 1e-9 under this homography")]
    DegenerateZeroVector,
    #[error("invalid homography matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
}

/// Coordinate system tag carried by homographies and correspondences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Image,
    Geo,
    Field,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Image => write!(f, "image"),
            Domain::Geo => write!(f, "geo"),
            Domain::Field => write!(f, "field"),
        }
    }
}

/// Pixel position in a video frame; x is the column, y the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub x: f64,
    pub y: f64,
}

impl ImagePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Frame-bound check applied at ingestion only; math operations accept
    /// any finite point.
    pub fn in_frame(&self, width: f64, height: f64) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && (0.0..=width).contains(&self.x)
            && (0.0..=height).contains(&self.y)
    }
}

/// Wearable-sensor position in degrees latitude/longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeometryError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeometryError::InvalidCoordinate(format!("latitude {lat}")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeometryError::InvalidCoordinate(format!("longitude {lon}")));
        }
        Ok(Self { lat, lon })
    }
}

/// Pitch position in meters; origin at the top-left corner, y toward the
/// bottom touchline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
}

impl FieldPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Ingestion bound: within the pitch rectangle plus a 5 m apron.
    pub fn in_bounds(&self, field_length: f64, field_width: f64) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && (-5.0..=field_length + 5.0).contains(&self.x)
            && (-5.0..=field_width + 5.0).contains(&self.y)
    }
}

/// One annotated point pair between two domains, optionally tagged with the
/// field-spot name it came from (e.g. `corner_NW`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub src: [f64; 2],
    pub dst: [f64; 2],
    pub label: Option<String>,
}

impl Correspondence {
    pub fn new(src: [f64; 2], dst: [f64; 2]) -> Self {
        Self { src, dst, label: None }
    }
}

/// A 3x3 projective map between two planar domains, stored normalized so the
/// bottom-right entry is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
    src: Domain,
    dst: Domain,
}

impl Homography {
    /// Wrap a matrix after normalizing `m[2][2]` to 1. Rejects matrices that
    /// are singular (|det| <= 1e-12 after normalization) or cannot be
    /// normalized.
    pub fn from_matrix(m: Matrix3<f64>, src: Domain, dst: Domain) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidMatrix("non-finite entry".into()));
        }
        let w = m[(2, 2)];
        if w.abs() < 1e-15 {
            return Err(GeometryError::InvalidMatrix(
                "bottom-right entry too close to zero to normalize".into(),
            ));
        }
        let m = m / w;
        let det = m.determinant();
        if !det.is_finite() || det.abs() <= 1e-12 {
            return Err(GeometryError::InvalidMatrix(format!("singular (det = {det:e})")));
        }
        Ok(Self { m, src, dst })
    }

    pub fn identity(src: Domain, dst: Domain) -> Self {
        Self { m: Matrix3::identity(), src, dst }
    }

    /// Similarity transform: rotation by `theta_deg` in the field-angle
    /// convention (counterclockwise as drawn, with y growing downward),
    /// uniform `scale`, then translation.
    pub fn similarity(
        theta_deg: f64,
        scale: f64,
        tx: f64,
        ty: f64,
        src: Domain,
        dst: Domain,
    ) -> Result<Self, GeometryError> {
        let (s, c) = theta_deg.to_radians().sin_cos();
        let m = Matrix3::new(
            scale * c, scale * s, tx, //
            -scale * s, scale * c, ty, //
            0.0, 0.0, 1.0,
        );
        Self::from_matrix(m, src, dst)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn src_domain(&self) -> Domain {
        self.src
    }

    pub fn dst_domain(&self) -> Domain {
        self.dst
    }

    /// Apply the projective map to a point.
    pub fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let h = self.m * Vector3::new(p[0], p[1], 1.0);
        if h.z.abs() < 1e-12 {
            return Err(GeometryError::PointAtInfinity);
        }
        Ok([h.x / h.z, h.y / h.z])
    }

    /// Inverse map with src/dst domains swapped.
    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| GeometryError::InvalidMatrix("not invertible".into()))?;
        Homography::from_matrix(inv, self.dst, self.src)
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[3 * r + c] = self.m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(v: [f64; 9], src: Domain, dst: Domain) -> Result<Self, GeometryError> {
        let m = Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
        Self::from_matrix(m, src, dst)
    }
}

/// Angle of a field-plane vector in degrees `[0, 360)` under the broadcast
/// convention (0 = rightward, 90 = toward the top touchline).
pub fn field_vector_angle_deg(dx: f64, dy: f64) -> f64 {
    normalize_deg((-dy).atan2(dx).to_degrees())
}

/// Maximum Euclidean reprojection error of a homography over a set of
/// correspondences.
pub fn max_reprojection_error(h: &Homography, pairs: &[Correspondence]) -> Result<f64, GeometryError> {
    let mut worst = 0.0f64;
    for p in pairs {
        let q = h.apply(p.src)?;
        let e = ((q[0] - p.dst[0]).powi(2) + (q[1] - p.dst[1]).powi(2)).sqrt();
        worst = worst.max(e);
    }
    Ok(worst)
}

/// Convert a raw absolute orientation into the reference-camera frame by
/// subtracting the angle of the mapped apparent zero-vector.
///
/// A second image point one pixel to the right of the player is mapped to
/// the field alongside the player position; the direction between the two
/// mapped points is the field direction the camera renders as "image
/// rightward" at that spot, and its field angle is subtracted from
/// `alpha_raw_deg`. Under the reference camera this direction is the field
/// zero direction and the orientation passes through unchanged. The unit
/// pixel offset makes the correction position-dependent under perspective,
/// which is intentional: it matches what a crop of the player actually
/// shows.
pub fn compensate_angle(
    alpha_raw_deg: f64,
    player_pos: ImagePoint,
    h_if: &Homography,
) -> Result<f64, GeometryError> {
    let f = h_if.apply([player_pos.x, player_pos.y])?;
    let f0 = h_if.apply([player_pos.x + 1.0, player_pos.y])?;
    let (dx, dy) = (f0[0] - f[0], f0[1] - f[1]);
    if (dx * dx + dy * dy).sqrt() < 1e-9 {
        return Err(GeometryError::DegenerateZeroVector);
    }
    let zero_angle = field_vector_angle_deg(dx, dy);
    Ok(normalize_deg(normalize_deg(alpha_raw_deg) - zero_angle))
}
