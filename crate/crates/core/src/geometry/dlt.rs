//! Homography estimation via the normalized direct linear transform.

use super::{Correspondence, Domain, GeometryError, Homography};
use nalgebra::{DMatrix, Matrix3};

/// Estimate the least-squares projective map from `src` to `dst` points.
///
/// Both point sets are isotropically normalized (zero centroid, mean radius
/// sqrt(2)) before building the 2n x 9 design matrix; the solution is the
/// right singular vector of the smallest singular value, de-normalized and
/// scaled so the bottom-right entry is 1. Geo-domain inputs work unchanged:
/// the normalization absorbs the tiny anisotropic spans of raw
/// latitude/longitude over a pitch-sized area.
pub fn estimate_homography(
    pairs: &[Correspondence],
    src_domain: Domain,
    dst_domain: Domain,
) -> Result<Homography, GeometryError> {
    let n = pairs.len();
    if n < 4 {
        return Err(GeometryError::TooFewPoints(n));
    }
    for p in pairs {
        if p.src.iter().chain(p.dst.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidCoordinate(
                "non-finite correspondence".into(),
            ));
        }
    }
    check_duplicates(pairs)?;

    let src: Vec<[f64; 2]> = pairs.iter().map(|p| p.src).collect();
    let dst: Vec<[f64; 2]> = pairs.iter().map(|p| p.dst).collect();
    let (src_n, t_src) = hartley_normalize(&src)
        .ok_or_else(|| GeometryError::DegenerateConfiguration("source points coincide".into()))?;
    let (dst_n, t_dst) = hartley_normalize(&dst)
        .ok_or_else(|| GeometryError::DegenerateConfiguration("destination points coincide".into()))?;

    // In the minimal configuration any collinear triple is fatal: either the
    // system loses rank or its only exact solution is a collapsed map.
    // Larger sets legitimately contain collinear spots (points along a
    // touchline), so they are left to the rank and collapse checks below.
    if n == 4 {
        for (points, side) in [(&src_n, "source"), (&dst_n, "destination")] {
            if let Some((i, j, k)) = collinear_triple(points) {
                return Err(GeometryError::DegenerateConfiguration(format!(
                    "{side} points {i}, {j}, {k} are collinear"
                )));
            }
        }
    }

    // A h = 0 with h the row-major flattening of H.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src_n.iter().zip(dst_n.iter()).enumerate() {
        let (x, y) = (s[0], s[1]);
        let (u, v) = (d[0], d[1]);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma = &svd.singular_values;
    // A full-rank configuration has exactly one (near-)zero singular value.
    // A second small one means the solution is not unique: collinear or
    // otherwise degenerate input.
    if sigma[7] <= 1e-10 * sigma[0].max(1.0) {
        return Err(GeometryError::DegenerateConfiguration(
            "design matrix rank-deficient (collinear points?)".into(),
        ));
    }
    let h_vec = v_t.row(8);
    let h_norm = Matrix3::new(
        h_vec[0], h_vec[1], h_vec[2], //
        h_vec[3], h_vec[4], h_vec[5], //
        h_vec[6], h_vec[7], h_vec[8],
    );

    let t_dst_inv = t_dst
        .try_inverse()
        .expect("normalization transform is invertible by construction");
    let h = t_dst_inv * h_norm * t_src;

    // scale-invariant collapse check: a map that folds the plane onto a line
    // has a vanishing determinant relative to its Frobenius norm
    let unit_det = (h / h.norm()).determinant().abs();
    if unit_det < 1e-13 {
        return Err(GeometryError::DegenerateConfiguration(format!(
            "estimated map collapses the plane (unit determinant {unit_det:.1e})"
        )));
    }

    Homography::from_matrix(h, src_domain, dst_domain).map_err(|e| match e {
        GeometryError::InvalidMatrix(msg) => GeometryError::DegenerateConfiguration(msg),
        other => other,
    })
}

/// First collinear triple among normalized points (coordinates O(1)), if
/// any.
fn collinear_triple(points: &[[f64; 2]]) -> Option<(usize, usize, usize)> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            for k in (j + 1)..points.len() {
                let (a, b, c) = (points[i], points[j], points[k]);
                let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if area.abs() < 1e-9 {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

fn check_duplicates(pairs: &[Correspondence]) -> Result<(), GeometryError> {
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let ds = dist2(pairs[i].src, pairs[j].src);
            let dd = dist2(pairs[i].dst, pairs[j].dst);
            if ds < 1e-18 || dd < 1e-18 {
                return Err(GeometryError::DegenerateConfiguration(format!(
                    "correspondences {i} and {j} duplicate a point"
                )));
            }
        }
    }
    Ok(())
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Isotropic normalization: translate the centroid to the origin and scale
/// the mean distance to sqrt(2). Returns `None` when all points coincide.
fn hartley_normalize(points: &[[f64; 2]]) -> Option<(Vec<[f64; 2]>, Matrix3<f64>)> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-15 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let normalized = points
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    Some((normalized, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::max_reprojection_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    fn pairs_from(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Vec<Correspondence> {
        src.iter()
            .zip(dst)
            .map(|(&s, &d)| Correspondence::new(s, d))
            .collect()
    }

    #[test]
    fn identity_from_unit_square() {
        let pairs = pairs_from(&square(), &square());
        let h = estimate_homography(&pairs, Domain::Image, Domain::Field).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((h.matrix()[(r, c)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pure_scaling_from_unit_square() {
        let dst: Vec<[f64; 2]> = square().iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect();
        let pairs = pairs_from(&square(), &dst);
        let h = estimate_homography(&pairs, Domain::Image, Domain::Field).unwrap();
        let m = h.matrix();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-10);
        assert!((m[(1, 1)] - 2.0).abs() < 1e-10);
        assert!((m[(2, 2)] - 1.0).abs() < 1e-15);
        assert!(m[(0, 1)].abs() < 1e-10 && m[(1, 0)].abs() < 1e-10);
    }

    #[test]
    fn recovers_random_projective_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let truth = loop {
                let mut v = [0.0; 9];
                for e in v.iter_mut().take(6) {
                    *e = rng.gen_range(-2.0..2.0);
                }
                v[6] = rng.gen_range(-0.01..0.01);
                v[7] = rng.gen_range(-0.01..0.01);
                v[8] = 1.0;
                if let Ok(h) = Homography::from_row_major(v, Domain::Image, Domain::Field) {
                    if h.matrix().determinant().abs() > 0.1 {
                        break h;
                    }
                }
            };
            // oracle: forward-project six sample points through the known map
            let src: Vec<[f64; 2]> = (0..6)
                .map(|_| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
                .collect();
            let pairs: Vec<Correspondence> = src
                .iter()
                .map(|&s| Correspondence::new(s, truth.apply(s).unwrap()))
                .collect();
            let est = estimate_homography(&pairs, Domain::Image, Domain::Field).unwrap();
            let (a, b) = (est.to_row_major(), truth.to_row_major());
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-6, "entry mismatch: {x} vs {y}");
            }
            assert!(max_reprojection_error(&est, &pairs).unwrap() < 1e-6);
        }
    }

    #[test]
    fn reprojection_error_is_tiny_on_training_pairs() {
        let src = [[10.0, 20.0], [800.0, 30.0], [1500.0, 900.0], [40.0, 1000.0], [960.0, 540.0], [300.0, 700.0]];
        let truth = Homography::from_row_major(
            [0.06, 0.004, -3.0, -0.002, 0.055, 1.0, 1e-5, 2e-5, 1.0],
            Domain::Image,
            Domain::Field,
        )
        .unwrap();
        let pairs: Vec<Correspondence> = src
            .iter()
            .map(|&s| Correspondence::new(s, truth.apply(s).unwrap()))
            .collect();
        let est = estimate_homography(&pairs, Domain::Image, Domain::Field).unwrap();
        assert!(max_reprojection_error(&est, &pairs).unwrap() < 1e-6);
    }

    #[test]
    fn too_few_points() {
        let pairs = pairs_from(&square()[..3], &square()[..3]);
        assert!(matches!(
            estimate_homography(&pairs, Domain::Image, Domain::Field),
            Err(GeometryError::TooFewPoints(3))
        ));
    }

    #[test]
    fn duplicate_points_rejected() {
        let src = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let dst = square();
        let pairs = pairs_from(&src, &dst);
        assert!(matches!(
            estimate_homography(&pairs, Domain::Image, Domain::Field),
            Err(GeometryError::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn collinear_minimal_configuration_rejected() {
        // three of four source points on a line: solution not unique
        let src = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]];
        let dst = square();
        let pairs = pairs_from(&src, &dst);
        assert!(matches!(
            estimate_homography(&pairs, Domain::Image, Domain::Field),
            Err(GeometryError::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn geo_scale_inputs_are_well_conditioned() {
        // pitch-sized span in raw degrees latitude/longitude
        let lat0 = 41.380898;
        let lon0 = 2.122820;
        let to_field = |lat: f64, lon: f64| [(lon - lon0) / 0.00126 * 105.0, (lat0 - lat) / 0.00061 * 68.0];
        let src = [
            [lat0, lon0],
            [lat0, lon0 + 0.00126],
            [lat0 - 0.00061, lon0 + 0.00126],
            [lat0 - 0.00061, lon0],
            [lat0 - 0.0003, lon0 + 0.0006],
        ];
        let pairs: Vec<Correspondence> = src
            .iter()
            .map(|&[lat, lon]| Correspondence::new([lat, lon], to_field(lat, lon)))
            .collect();
        let h = estimate_homography(&pairs, Domain::Geo, Domain::Field).unwrap();
        let err = max_reprojection_error(&h, &pairs).unwrap();
        assert!(err < 1e-6, "reprojection error {err}");
    }
}
