//! Multi-rate sensor-to-video synchronization.
//!
//! Positions arrive at 100 Hz and orientations at 10 Hz; video frames tick
//! at the configured fps. For every requested frame the position is linearly
//! interpolated between the bracketing position samples, and the heading is
//! obtained from the two bracketing orientation samples via
//! Euler-to-heading conversion followed by shortest-arc circular
//! interpolation. A frame-player combination outside sensor coverage emits
//! no record and is counted.

use super::{FusionError, SensorSample};
use crate::angles::{circular_interpolate, euler_to_heading};
use crate::geometry::GeoPoint;
use std::collections::BTreeMap;

/// Sensor state resampled onto one video frame for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedSample {
    pub frame_id: i64,
    pub player_id: String,
    pub pos: GeoPoint,
    pub heading_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SyncReport {
    /// Player-frame combinations outside position or orientation coverage.
    pub no_coverage: usize,
    /// Orientation samples dropped because the torso normal was near
    /// vertical.
    pub degenerate_orientation: usize,
    /// Heading interpolations that hit the exact-antipodal convention.
    pub antipodal_interpolations: usize,
}

/// Resample per-player sensor tracks onto video frame timestamps.
///
/// `frames` are video frame indices; each maps to sensor time
/// `frame / fps + clock_offset_s`. Samples must be strictly increasing in
/// time per player. Output is ordered by frame, then player id.
pub fn synchronize(
    samples: &[SensorSample],
    frames: &[i64],
    fps: f64,
    clock_offset_s: f64,
) -> Result<(Vec<SyncedSample>, SyncReport), FusionError> {
    if !fps.is_finite() || fps <= 0.0 {
        return Err(FusionError::InvalidConfig(format!("fps must be positive, got {fps}")));
    }
    if !clock_offset_s.is_finite() {
        return Err(FusionError::InvalidConfig("clock offset must be finite".into()));
    }

    struct Track {
        positions: Vec<(f64, GeoPoint)>,
        headings: Vec<(f64, f64)>,
    }

    let mut report = SyncReport::default();
    let mut tracks: BTreeMap<&str, Track> = BTreeMap::new();
    for s in samples {
        let track = tracks.entry(s.player_id.as_str()).or_insert_with(|| Track {
            positions: Vec::new(),
            headings: Vec::new(),
        });
        if let Some(&(prev_t, _)) = track.positions.last() {
            if s.t <= prev_t {
                return Err(FusionError::UnsortedInput(s.player_id.clone()));
            }
        }
        track.positions.push((s.t, s.pos));
        if let Some(e) = &s.orient {
            match euler_to_heading(e) {
                Ok(h) => track.headings.push((s.t, h)),
                Err(_) => report.degenerate_orientation += 1,
            }
        }
    }

    let mut frame_ids: Vec<i64> = frames.to_vec();
    frame_ids.sort_unstable();
    frame_ids.dedup();

    let mut out = Vec::new();
    for &frame_id in &frame_ids {
        let t = frame_id as f64 / fps + clock_offset_s;
        for (player_id, track) in &tracks {
            let pos = interpolate_position(&track.positions, t);
            let heading = interpolate_heading(&track.headings, t, &mut report);
            match (pos, heading) {
                (Some(pos), Some(heading_deg)) => out.push(SyncedSample {
                    frame_id,
                    player_id: (*player_id).to_string(),
                    pos,
                    heading_deg,
                }),
                _ => report.no_coverage += 1,
            }
        }
    }
    Ok((out, report))
}

fn bracket<T>(series: &[(f64, T)], t: f64) -> Option<(usize, usize, f64)> {
    if series.is_empty() || t < series[0].0 || t > series[series.len() - 1].0 {
        return None;
    }
    let right = series.partition_point(|(ts, _)| *ts < t);
    if series[right].0 == t {
        return Some((right, right, 0.0));
    }
    let left = right - 1;
    let (t0, t1) = (series[left].0, series[right].0);
    Some((left, right, (t - t0) / (t1 - t0)))
}

fn interpolate_position(series: &[(f64, GeoPoint)], t: f64) -> Option<GeoPoint> {
    let (l, r, u) = bracket(series, t)?;
    let (a, b) = (series[l].1, series[r].1);
    Some(GeoPoint {
        lat: a.lat + u * (b.lat - a.lat),
        lon: a.lon + u * (b.lon - a.lon),
    })
}

fn interpolate_heading(series: &[(f64, f64)], t: f64, report: &mut SyncReport) -> Option<f64> {
    let (l, r, u) = bracket(series, t)?;
    let i = circular_interpolate(series[l].1, series[r].1, u)
        .expect("fraction is within [0, 1] by construction");
    if i.antipodal {
        report.antipodal_interpolations += 1;
    }
    Some(i.angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::EulerOrientation;
    use approx::assert_relative_eq;

    fn sample(id: &str, t: f64, lat: f64, lon: f64, yaw: Option<f64>) -> SensorSample {
        SensorSample {
            player_id: id.into(),
            t,
            pos: GeoPoint::new(lat, lon).unwrap(),
            orient: yaw.map(|y| EulerOrientation::new(0.0, 0.0, y)),
        }
    }

    #[test]
    fn samples_on_frame_timestamps_pass_through() {
        // frame 1 at 25 fps is t = 0.04, exactly the 4th 100 Hz sample
        let samples: Vec<SensorSample> = (0..=10)
            .map(|k| {
                let t = k as f64 / 100.0;
                sample("p1", t, 41.0 + t, 2.0, (k % 10 == 0).then_some(90.0))
            })
            .collect();
        let (out, report) = synchronize(&samples, &[0, 1], 25.0, 0.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(report.no_coverage, 0);
        assert_eq!(out[0].pos.lat, 41.0);
        assert_eq!(out[1].pos.lat, 41.0 + 0.04);
        assert_eq!(out[0].heading_deg, 90.0);
    }

    #[test]
    fn heading_interpolates_across_wrap() {
        let samples = vec![
            sample("p1", 0.0, 41.0, 2.0, Some(350.0)),
            sample("p1", 0.05, 41.0, 2.0, None),
            sample("p1", 0.1, 41.0, 2.0, Some(10.0)),
        ];
        // one frame exactly between the two orientation samples
        let (out, _) = synchronize(&samples, &[1], 20.0, 0.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].heading_deg, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn position_linear_midpoint() {
        let samples = vec![
            sample("p1", 0.0, 0.0, 0.0, Some(0.0)),
            sample("p1", 0.01, 1.0, 0.0, Some(0.0)),
        ];
        let (out, _) = synchronize(&samples, &[1], 200.0, 0.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].pos.lat, 0.5, epsilon = 1e-12);
        assert_relative_eq!(out[0].pos.lon, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unsorted_input_rejected() {
        let samples = vec![
            sample("p1", 0.1, 0.0, 0.0, None),
            sample("p1", 0.05, 0.0, 0.0, None),
        ];
        assert!(matches!(
            synchronize(&samples, &[0], 25.0, 0.0),
            Err(FusionError::UnsortedInput(p)) if p == "p1"
        ));
    }

    #[test]
    fn frames_outside_coverage_are_counted() {
        let samples = vec![
            sample("p1", 1.0, 0.0, 0.0, Some(0.0)),
            sample("p1", 1.1, 0.0, 0.0, Some(0.0)),
        ];
        // offset pushes every frame before coverage
        let (out, report) = synchronize(&samples, &[0, 1, 2], 25.0, -10.0).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.no_coverage, 3);
    }

    #[test]
    fn clock_offset_shifts_lookup() {
        let samples = vec![
            sample("p1", 5.0, 10.0, 0.0, Some(45.0)),
            sample("p1", 5.1, 11.0, 0.0, Some(45.0)),
        ];
        let (out, _) = synchronize(&samples, &[0], 20.0, 5.05).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].pos.lat, 10.5, epsilon = 1e-9);
    }

    #[test]
    fn coverage_requires_both_streams() {
        // positions cover the frame but orientations do not
        let samples = vec![
            sample("p1", 0.0, 0.0, 0.0, None),
            sample("p1", 0.02, 0.0, 0.0, None),
            sample("p1", 0.04, 0.0, 0.0, Some(10.0)),
            sample("p1", 0.06, 0.0, 0.0, None),
        ];
        let (out, report) = synchronize(&samples, &[0], 50.0, 0.0).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.no_coverage, 1);
        // a frame landing exactly on the single orientation sample works
        let (out, _) = synchronize(&samples, &[2], 50.0, 0.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].heading_deg, 10.0);
    }

    #[test]
    fn smooth_input_gives_continuous_headings() {
        // heading sweeps through the 0/360 wrap at 40 deg/s
        let rate = 40.0;
        let samples: Vec<SensorSample> = (0..=100)
            .map(|k| {
                let t = k as f64 / 100.0;
                let orient = (k % 10 == 0)
                    .then(|| crate::angles::normalize_deg(340.0 + rate * t));
                sample("p1", t, 0.0, 0.0, orient)
            })
            .collect();
        let frames: Vec<i64> = (0..25).collect();
        let (out, report) = synchronize(&samples, &frames, 25.0, 0.0).unwrap();
        assert_eq!(out.len(), 25);
        assert_eq!(report.no_coverage, 0);
        let max_step = rate / 25.0 + 1e-9;
        for w in out.windows(2) {
            let step = crate::angles::shortest_arc_deg(w[1].heading_deg, w[0].heading_deg);
            assert!(step <= max_step, "discontinuity: {step} > {max_step}");
        }
    }
}
