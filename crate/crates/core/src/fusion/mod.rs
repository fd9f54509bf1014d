//! Automatic dataset completion: turn raw detections plus sensor tracks into
//! labeled, camera-compensated orientation records.
//!
//! The pipeline stages mirror how the data flows:
//!
//! 1. **Jersey filtering** — color-histogram features per detection crop,
//!    clustered with K-means (K=3) into home team, away team, and outliers;
//!    only the sensor-carrying (home) team is kept.
//! 2. **Mapping** — the bottom-center of each kept box goes through the
//!    frame's image-to-field homography.
//! 3. **Synchronization** — 100 Hz positions and 10 Hz orientations are
//!    resampled onto video frame timestamps.
//! 4. **Matching** — minimum-cost assignment between detections and sensor
//!    positions on the field plane, gated by a maximum pairing distance.
//! 5. **Labeling** — each matched player's heading is compensated at the
//!    detection's image position and attached as bin index plus soft labels.
//!
//! Per-frame work is independent and runs in parallel; output order is
//! deterministic (sorted by frame, then player) regardless of schedule.

mod assign;
mod jersey;
mod sync;

pub use assign::{match_frame, AssignmentResult, MatchPair};
pub use jersey::{
    fit_jersey_clusters, jersey_feature, to_grayscale, ClusterModel, CropSource, DirCropSource,
    JerseyFeature, MemCropSource, NoCrops, RgbCrop, Role,
};
pub use sync::{synchronize, SyncReport, SyncedSample};

use crate::angles::{bin_of, soft_labels, AnglesError, BinSet, EulerOrientation, SoftLabels};
use crate::config::BuildConfig;
use crate::geometry::{
    compensate_angle, FieldPoint, GeoPoint, GeometryError, Homography, ImagePoint,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("empty crop")]
    EmptyCrop,
    #[error("need at least {k} samples to fit {k} clusters, got {got}")]
    TooFewSamples { k: usize, got: usize },
    #[error("sensor samples for player {0} are not sorted strictly by time")]
    UnsortedInput(String),
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Angles(#[from] AnglesError),
}

/// One bounding box in a video frame, in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_id: i64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_ref: Option<String>,
}

impl Detection {
    /// Middle of the box's bottom boundary: the point that stands on the
    /// field plane.
    pub fn bottom_center(&self) -> ImagePoint {
        ImagePoint::new(self.x + self.w / 2.0, self.y + self.h)
    }

    /// Clamp the box to frame bounds; a box that collapses to nonpositive
    /// size is invalid input.
    pub fn clamped(mut self, frame_w: f64, frame_h: f64) -> Result<Self, FusionError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(FusionError::InvalidDetection(format!(
                "non-finite box in frame {}",
                self.frame_id
            )));
        }
        let x1 = (self.x + self.w).clamp(0.0, frame_w);
        let y1 = (self.y + self.h).clamp(0.0, frame_h);
        self.x = self.x.clamp(0.0, frame_w);
        self.y = self.y.clamp(0.0, frame_h);
        self.w = x1 - self.x;
        self.h = y1 - self.y;
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(FusionError::InvalidDetection(format!(
                "box in frame {} has nonpositive size after clamping",
                self.frame_id
            )));
        }
        Ok(self)
    }
}

/// One wearable-sensor sample. Position rows arrive at 100 Hz; orientation
/// is present only on the 10 Hz rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub player_id: String,
    /// Seconds on the sensor clock, strictly increasing per player.
    pub t: f64,
    pub pos: GeoPoint,
    pub orient: Option<EulerOrientation>,
}

/// One player at one frame with its compensated, binned orientation label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedRecord {
    pub frame_id: i64,
    pub player_id: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_ref: Option<String>,
    pub alpha_compensated: f64,
    /// 1-based bin index; always `bin_of(alpha_compensated)`.
    pub bin: usize,
    /// Always `soft_labels(alpha_compensated)`.
    pub soft: SoftLabels,
    pub grayscale_flag: bool,
}

/// Per-frame image-to-field homographies plus the single geo-to-field map.
///
/// Frames between annotations use the nearest annotated frame, ties toward
/// the earlier one.
#[derive(Debug, Clone)]
pub struct HomographySet {
    if_by_frame: BTreeMap<i64, Homography>,
    sf: Homography,
}

impl HomographySet {
    pub fn new(if_frames: Vec<(i64, Homography)>, sf: Homography) -> Result<Self, FusionError> {
        if if_frames.is_empty() {
            return Err(FusionError::InvalidConfig(
                "no image-to-field homographies provided".into(),
            ));
        }
        Ok(Self {
            if_by_frame: if_frames.into_iter().collect(),
            sf,
        })
    }

    pub fn h_sf(&self) -> &Homography {
        &self.sf
    }

    pub fn annotated_frames(&self) -> impl Iterator<Item = i64> + '_ {
        self.if_by_frame.keys().copied()
    }

    /// Image-to-field homography for a frame: exact if annotated, otherwise
    /// the nearest annotated frame by index, ties toward earlier.
    pub fn h_if(&self, frame_id: i64) -> &Homography {
        if let Some(h) = self.if_by_frame.get(&frame_id) {
            return h;
        }
        let before = self.if_by_frame.range(..=frame_id).next_back();
        let after = self.if_by_frame.range(frame_id + 1..).next();
        match (before, after) {
            (Some((bf, bh)), Some((af, ah))) => {
                if (frame_id - bf) <= (af - frame_id) {
                    bh
                } else {
                    ah
                }
            }
            (Some((_, bh)), None) => bh,
            (None, Some((_, ah))) => ah,
            (None, None) => unreachable!("constructor guarantees at least one entry"),
        }
    }
}

/// Map a detection to the field plane through the frame's homography.
pub fn map_detection(d: &Detection, h_if: &Homography) -> Result<FieldPoint, GeometryError> {
    let p = d.bottom_center();
    let f = h_if.apply([p.x, p.y])?;
    Ok(FieldPoint::new(f[0], f[1]))
}

/// Counters and aggregates describing one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub frames_total: usize,
    /// Frames where no sensor player had coverage.
    pub frames_skipped: usize,
    pub detections_in: usize,
    pub detections_filtered_out: usize,
    pub detections_without_crop: usize,
    pub jersey_filter_applied: bool,
    pub cluster_counts: Option<Vec<usize>>,
    pub matched: usize,
    pub unmatched_detections: usize,
    pub unmatched_players: usize,
    pub player_frames_no_coverage: usize,
    pub degenerate_orientation_samples: usize,
    pub antipodal_interpolations: usize,
    pub mapping_failures: usize,
    pub compensation_failures: usize,
    pub mean_match_distance_m: f64,
}

impl BuildReport {
    pub fn human_summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "frames: {} total, {} skipped (no sensor coverage)\n",
            self.frames_total, self.frames_skipped
        ));
        s.push_str(&format!(
            "detections: {} in, {} filtered out by jersey, {} without crop\n",
            self.detections_in, self.detections_filtered_out, self.detections_without_crop
        ));
        if let Some(c) = &self.cluster_counts {
            s.push_str(&format!("jersey clusters (home/away/outlier by size): {c:?}\n"));
        }
        s.push_str(&format!(
            "matched: {} pairs (mean distance {:.3} m), {} detections and {} player-frames unmatched\n",
            self.matched, self.mean_match_distance_m, self.unmatched_detections, self.unmatched_players
        ));
        s.push_str(&format!(
            "coverage: {} player-frames outside sensor range; {} degenerate orientation samples; \
             {} antipodal interpolations; {} mapping / {} compensation failures\n",
            self.player_frames_no_coverage,
            self.degenerate_orientation_samples,
            self.antipodal_interpolations,
            self.mapping_failures,
            self.compensation_failures
        ));
        s
    }
}

/// Run the full dataset-completion pipeline.
///
/// Aborts only on invalid configuration or missing mandatory inputs;
/// per-frame degeneracies are counted in the report and skipped.
pub fn build_dataset(
    detections: &[Detection],
    sensor: &[SensorSample],
    homographies: &HomographySet,
    bins: &BinSet,
    config: &BuildConfig,
    crops: &dyn CropSource,
) -> Result<(Vec<MatchedRecord>, BuildReport), FusionError> {
    config.validate().map_err(FusionError::InvalidConfig)?;

    let mut report = BuildReport {
        detections_in: detections.len(),
        ..BuildReport::default()
    };

    // Jersey filtering: fit one cluster model over the whole input, then keep
    // detections assigned to the home (sensor-carrying) team. Detections
    // without a resolvable crop are conservatively kept; the gate catches
    // strays during matching.
    let features: Vec<Option<JerseyFeature>> = detections
        .par_iter()
        .map(|d| {
            d.crop_ref
                .as_deref()
                .and_then(|r| crops.load(r))
                .and_then(|crop| jersey_feature(&crop).ok())
        })
        .collect();
    let with_crop: Vec<&JerseyFeature> = features.iter().flatten().collect();
    report.detections_without_crop = detections.len() - with_crop.len();

    let mut kept: Vec<bool> = vec![true; detections.len()];
    if config.jersey_filter && with_crop.len() >= 3 {
        let owned: Vec<JerseyFeature> = with_crop.iter().map(|&f| f.clone()).collect();
        let mut model = fit_jersey_clusters(&owned, 3, config.seed)?;
        if let Some(home) = config.home_cluster {
            if home >= 3 {
                return Err(FusionError::InvalidConfig(format!(
                    "home_cluster {home} outside 0..3"
                )));
            }
            model.override_home(home);
        }
        for (i, feat) in features.iter().enumerate() {
            if let Some(f) = feat {
                let (_, role) = model.assign(f);
                if role != Role::Home {
                    kept[i] = false;
                    report.detections_filtered_out += 1;
                }
            }
        }
        report.jersey_filter_applied = true;
        report.cluster_counts = Some(model.counts().to_vec());
    }

    // Frames to process come from the surviving detections.
    let mut frames: Vec<i64> = detections
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d.frame_id)
        .collect();
    frames.sort_unstable();
    frames.dedup();
    report.frames_total = frames.len();

    let (synced, sync_report) =
        synchronize(sensor, &frames, config.fps, config.clock_offset_s)?;
    report.player_frames_no_coverage = sync_report.no_coverage;
    report.degenerate_orientation_samples = sync_report.degenerate_orientation;
    report.antipodal_interpolations = sync_report.antipodal_interpolations;

    // Index synchronized samples per frame; players come out sorted by id.
    let mut by_frame: BTreeMap<i64, Vec<&SyncedSample>> = BTreeMap::new();
    for s in &synced {
        by_frame.entry(s.frame_id).or_default().push(s);
    }

    struct FrameOutcome {
        records: Vec<MatchedRecord>,
        matched_distance_sum: f64,
        unmatched_detections: usize,
        unmatched_players: usize,
        mapping_failures: usize,
        compensation_failures: usize,
        skipped: bool,
    }

    let empty: Vec<&SyncedSample> = Vec::new();
    let outcomes: Vec<FrameOutcome> = frames
        .par_iter()
        .map(|&frame_id| {
            let h_if = homographies.h_if(frame_id);
            let mut out = FrameOutcome {
                records: Vec::new(),
                matched_distance_sum: 0.0,
                unmatched_detections: 0,
                unmatched_players: 0,
                mapping_failures: 0,
                compensation_failures: 0,
                skipped: false,
            };

            let frame_dets: Vec<usize> = detections
                .iter()
                .enumerate()
                .filter(|(i, d)| kept[*i] && d.frame_id == frame_id)
                .map(|(i, _)| i)
                .collect();

            let players = by_frame.get(&frame_id).unwrap_or(&empty);
            if players.is_empty() {
                out.skipped = true;
                out.unmatched_detections = frame_dets.len();
                return out;
            }

            let mut det_points = Vec::with_capacity(frame_dets.len());
            let mut det_idx = Vec::with_capacity(frame_dets.len());
            for &i in &frame_dets {
                match map_detection(&detections[i], h_if) {
                    Ok(p) => {
                        det_points.push(p);
                        det_idx.push(i);
                    }
                    Err(_) => out.mapping_failures += 1,
                }
            }

            let mut player_points = Vec::with_capacity(players.len());
            let mut player_sync: Vec<&SyncedSample> = Vec::with_capacity(players.len());
            for s in players {
                match homographies.h_sf().apply([s.pos.lat, s.pos.lon]) {
                    Ok(f) => {
                        player_points.push((s.player_id.clone(), FieldPoint::new(f[0], f[1])));
                        player_sync.push(s);
                    }
                    Err(_) => out.mapping_failures += 1,
                }
            }

            let assignment = match match_frame(&det_points, &player_points, config.gate_m) {
                Ok(a) => a,
                Err(_) => return out,
            };
            out.unmatched_detections += assignment.unmatched_detections.len();
            out.unmatched_players += assignment.unmatched_players.len();

            for pair in &assignment.pairs {
                let det = &detections[det_idx[pair.detection]];
                let synced = player_sync
                    .iter()
                    .find(|s| s.player_id == pair.player_id)
                    .expect("assignment pairs reference known players");
                match compensate_angle(synced.heading_deg, det.bottom_center(), h_if) {
                    Ok(alpha) => {
                        out.matched_distance_sum += pair.distance_m;
                        out.records.push(MatchedRecord {
                            frame_id,
                            player_id: pair.player_id.clone(),
                            bbox: [det.x, det.y, det.w, det.h],
                            crop_ref: det.crop_ref.clone(),
                            alpha_compensated: alpha,
                            bin: bin_of(alpha, bins),
                            soft: soft_labels(alpha, bins),
                            grayscale_flag: config.grayscale,
                        });
                    }
                    Err(_) => out.compensation_failures += 1,
                }
            }
            out
        })
        .collect();

    let mut records = Vec::new();
    let mut distance_sum = 0.0;
    for o in outcomes {
        report.matched += o.records.len();
        report.unmatched_detections += o.unmatched_detections;
        report.unmatched_players += o.unmatched_players;
        report.mapping_failures += o.mapping_failures;
        report.compensation_failures += o.compensation_failures;
        if o.skipped {
            report.frames_skipped += 1;
        }
        distance_sum += o.matched_distance_sum;
        records.extend(o.records);
    }
    report.mean_match_distance_m = if report.matched > 0 {
        distance_sum / report.matched as f64
    } else {
        0.0
    };

    records.sort_by(|a, b| {
        (a.frame_id, a.player_id.as_str()).cmp(&(b.frame_id, b.player_id.as_str()))
    });
    Ok((records, report))
}
