//! Deterministic synthetic scenarios for end-to-end verification.
//!
//! A scenario places home (sensor-carrying) players, away players, and
//! outliers (a referee) on constant-speed circular arcs inside disjoint grid
//! cells, so pairwise spacing is guaranteed and velocities never vanish —
//! headings follow the velocity direction plus a bounded smooth wobble and
//! stay continuous mod 360. A projective camera with optional pan/zoom
//! drift renders field positions to image boxes.
//!
//! The generator emits exactly the pipeline's ingestion formats (detections
//! JSONL, sensor CSV at 100/10 Hz, corner-annotation CSV, flat-color crop
//! PNGs) plus a ground-truth sidecar with, per player-frame, the compensated
//! orientation an ideal pipeline would produce: the 10 Hz headings are
//! resampled with the same shortest-arc interpolation the pipeline uses,
//! then compensated with the exact per-frame camera. Every random draw comes
//! from seeded streams in a fixed order, so a given config reproduces its
//! output byte for byte.

use crate::angles::{circular_interpolate, normalize_deg, normalize_signed_deg, EulerOrientation, CONVENTION_NOTE};
use crate::config::SynthConfig;
use crate::formats::{self, AnnotationRow, DomainPair, FormatError, TruthRow};
use crate::fusion::{Detection, SensorSample};
use crate::geometry::{
    compensate_angle, field_vector_angle_deg, Domain, FieldPoint, GeoPoint, GeometryError,
    Homography, ImagePoint,
};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Geo anchor for the synthetic pitch; the top-left field corner.
pub const GEO_ANCHOR: (f64, f64) = (41.380898, 2.122820);
const M_PER_DEG_LAT: f64 = 111_320.0;

fn m_per_deg_lon() -> f64 {
    M_PER_DEG_LAT * GEO_ANCHOR.0.to_radians().cos()
}

/// Field meters to latitude/longitude around the anchor (locally affine, so
/// a homography represents it exactly).
pub fn field_to_geo(p: FieldPoint) -> GeoPoint {
    GeoPoint {
        lat: GEO_ANCHOR.0 - p.y / M_PER_DEG_LAT,
        lon: GEO_ANCHOR.1 + p.x / m_per_deg_lon(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Home,
    Away,
    Referee,
}

/// One moving entity: circular arc of constant speed inside its grid cell.
#[derive(Debug, Clone)]
struct EntitySpec {
    id: String,
    team: Team,
    center: FieldPoint,
    radius: f64,
    /// Signed angular rate of the arc parameter, rad/s.
    omega: f64,
    phase: f64,
    wobble_amp_deg: f64,
    wobble_freq_hz: f64,
    wobble_phase: f64,
    pitch_phase: f64,
    roll_phase: f64,
    color: [u8; 3],
}

impl EntitySpec {
    fn pos(&self, t: f64) -> FieldPoint {
        let a = self.omega * t + self.phase;
        FieldPoint::new(
            self.center.x + self.radius * a.cos(),
            self.center.y + self.radius * a.sin(),
        )
    }

    fn heading(&self, t: f64) -> f64 {
        let a = self.omega * t + self.phase;
        let vx = -self.radius * self.omega * a.sin();
        let vy = self.radius * self.omega * a.cos();
        let wobble = self.wobble_amp_deg
            * (2.0 * std::f64::consts::PI * self.wobble_freq_hz * t + self.wobble_phase).sin();
        normalize_deg(field_vector_angle_deg(vx, vy) + wobble)
    }

    fn euler(&self, t: f64) -> EulerOrientation {
        let pitch = 6.0 * (2.0 * std::f64::consts::PI * 0.07 * t + self.pitch_phase).sin();
        let roll = 9.0 * (2.0 * std::f64::consts::PI * 0.05 * t + self.roll_phase).sin();
        EulerOrientation::new(roll, pitch, normalize_signed_deg(self.heading(t)))
    }

    fn max_heading_rate_deg_s(&self) -> f64 {
        self.omega.abs().to_degrees()
            + self.wobble_amp_deg * 2.0 * std::f64::consts::PI * self.wobble_freq_hz
    }
}

/// A fully specified scenario: entity paths plus the camera model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SynthConfig,
    entities: Vec<EntitySpec>,
    n_frames: i64,
    base_camera: Matrix3<f64>,
}

impl Scenario {
    pub fn n_frames(&self) -> i64 {
        self.n_frames
    }

    pub fn home_ids(&self) -> Vec<String> {
        self.entities
            .iter()
            .filter(|e| e.team == Team::Home)
            .map(|e| e.id.clone())
            .collect()
    }

    /// Declared upper bound on heading angular velocity across entities.
    pub fn max_heading_rate_deg_s(&self) -> f64 {
        self.entities
            .iter()
            .map(EntitySpec::max_heading_rate_deg_s)
            .fold(0.0, f64::max)
    }

    fn zoom(&self, t: f64) -> f64 {
        1.0 + self.config.zoom_amplitude * (2.0 * std::f64::consts::PI * 0.07 * t).sin()
    }

    /// Field-to-image camera at video time `t`, with pan/zoom drift about
    /// the image center.
    pub fn camera(&self, t: f64) -> Result<Homography, GeometryError> {
        let z = self.zoom(t);
        let (cx, cy) = (1920.0 / 2.0, 1080.0 / 2.0);
        let px = self.config.pan_amplitude_px * (2.0 * std::f64::consts::PI * 0.1 * t).sin();
        let py = 0.5 * self.config.pan_amplitude_px * (2.0 * std::f64::consts::PI * 0.1 * t).cos()
            - 0.5 * self.config.pan_amplitude_px;
        let k = Matrix3::new(
            z, 0.0, (1.0 - z) * cx + px, //
            0.0, z, (1.0 - z) * cy + py, //
            0.0, 0.0, 1.0,
        );
        Homography::from_matrix(k * self.base_camera, Domain::Field, Domain::Image)
    }

    /// Field spots used for synthetic corner annotations.
    pub fn annotation_spots(&self) -> Vec<(String, FieldPoint)> {
        let (l, w) = (self.config.field_length_m, self.config.field_width_m);
        vec![
            ("corner_NW".into(), FieldPoint::new(0.0, 0.0)),
            ("corner_NE".into(), FieldPoint::new(l, 0.0)),
            ("corner_SE".into(), FieldPoint::new(l, w)),
            ("corner_SW".into(), FieldPoint::new(0.0, w)),
            ("halfway_N".into(), FieldPoint::new(l / 2.0, 0.0)),
            ("halfway_S".into(), FieldPoint::new(l / 2.0, w)),
            ("center".into(), FieldPoint::new(l / 2.0, w / 2.0)),
            ("penalty_W".into(), FieldPoint::new(l / 4.0, w / 2.0)),
        ]
    }
}

/// Lay out entities and the camera for a config; no files are written.
pub fn build_scenario(config: &SynthConfig) -> Result<Scenario, SynthError> {
    config.validate().map_err(SynthError::InvalidConfig)?;
    let n_home = config.n_players;
    let n_away = config.away_count();
    let total = n_home + n_away + config.n_outliers;

    let (l, w) = (config.field_length_m, config.field_width_m);
    let margin = 6.0;
    let usable_l = l - 2.0 * margin;
    let usable_w = w - 2.0 * margin;
    if usable_l <= 0.0 || usable_w <= 0.0 {
        return Err(SynthError::InvalidConfig("field too small for 6 m margins".into()));
    }
    let cols = ((total as f64 * usable_l / usable_w).sqrt().ceil() as usize).max(1);
    let rows = total.div_ceil(cols);
    let cell_l = usable_l / cols as f64;
    let cell_w = usable_w / rows as f64;
    let r_cap = (cell_l.min(cell_w) - config.min_spacing_m) / 2.0 - 0.25;
    if r_cap < 0.8 {
        return Err(SynthError::InvalidConfig(format!(
            "cannot fit {total} entities with {} m spacing on a {l} x {w} field",
            config.min_spacing_m
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut entities = Vec::with_capacity(total);
    for i in 0..total {
        let (team, id, color) = if i < n_home {
            (Team::Home, format!("h{i:02}"), [204, 32, 32])
        } else if i < n_home + n_away {
            (Team::Away, format!("a{:02}", i - n_home), [32, 32, 204])
        } else {
            (Team::Referee, format!("ref{}", i - n_home - n_away), [230, 210, 30])
        };
        let col = i % cols;
        let row = i / cols;
        let center = FieldPoint::new(
            margin + (col as f64 + 0.5) * cell_l,
            margin + (row as f64 + 0.5) * cell_w,
        );
        let radius = rng.gen_range(0.8..=r_cap.min(6.0).max(0.81));
        let speed = rng.gen_range(1.2..3.5);
        let direction = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        entities.push(EntitySpec {
            id,
            team,
            center,
            radius,
            omega: direction * speed / radius,
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            wobble_amp_deg: rng.gen_range(2.0..8.0),
            wobble_freq_hz: rng.gen_range(0.05..0.15),
            wobble_phase: rng.gen_range(0.0..std::f64::consts::TAU),
            pitch_phase: rng.gen_range(0.0..std::f64::consts::TAU),
            roll_phase: rng.gen_range(0.0..std::f64::consts::TAU),
            color,
        });
    }

    // base camera: field rectangle centered in the frame with mild
    // perspective
    let sx = (1920.0 - 2.0 * 240.0) / l;
    let sy = (1080.0 - 2.0 * 100.0) / w;
    let s = sx.min(sy);
    let tx = (1920.0 - s * l) / 2.0;
    let ty = (1080.0 - s * w) / 2.0;
    let base_camera = Matrix3::new(
        s, 0.0, tx, //
        0.0, s, ty, //
        2e-5, 8e-5, 1.0,
    );

    let n_frames = (config.duration_s * config.fps).round() as i64;
    if n_frames < 1 {
        return Err(SynthError::InvalidConfig("duration yields no frames".into()));
    }
    Ok(Scenario { config: config.clone(), entities, n_frames, base_camera })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ScenarioStats {
    pub n_frames: i64,
    pub detections_total: usize,
    /// Home player-frames whose box fit inside the frame (before misses).
    pub visible_home_player_frames: usize,
    /// Visible home player-frames dropped by the miss rate.
    pub missed_home_detections: usize,
    pub annotated_frames: usize,
    pub max_heading_rate_deg_s: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioPaths {
    pub detections: PathBuf,
    pub sensors: PathBuf,
    pub annotations: PathBuf,
    pub truth: PathBuf,
    pub scenario: PathBuf,
    pub crops_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct GeneratedScenario {
    pub stats: ScenarioStats,
    pub paths: ScenarioPaths,
}

#[derive(Serialize)]
struct ScenarioFile<'a> {
    config: &'a SynthConfig,
    stats: &'a ScenarioStats,
    geo_anchor: [f64; 2],
    convention: &'static str,
}

/// Generate a scenario and write all ingestion files plus the truth sidecar
/// under `out_dir`.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<GeneratedScenario, SynthError> {
    let scenario = build_scenario(config)?;
    let fps = config.fps;
    std::fs::create_dir_all(out_dir).map_err(|e| SynthError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let crops_dir = out_dir.join("crops");
    if config.write_crops {
        std::fs::create_dir_all(&crops_dir).map_err(|e| SynthError::Io {
            path: crops_dir.display().to_string(),
            source: e,
        })?;
    }

    // independent seeded streams so toggling crop output cannot shift
    // detection noise
    let mut fork = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f0f_abcd_1234);
    let mut rng_det = ChaCha8Rng::seed_from_u64(fork.gen());
    let mut rng_crops = ChaCha8Rng::seed_from_u64(fork.gen());

    let mut stats = ScenarioStats {
        n_frames: scenario.n_frames,
        max_heading_rate_deg_s: scenario.max_heading_rate_deg_s(),
        ..ScenarioStats::default()
    };

    // detections + crops
    let mut detections: Vec<Detection> = Vec::new();
    for f in 0..scenario.n_frames {
        let t = f as f64 / fps;
        let cam = scenario.camera(t)?;
        let zoom = scenario.zoom(t);
        let (box_w, box_h) = (14.0 * zoom, 34.0 * zoom);
        for e in &scenario.entities {
            // fixed five draws per entity-frame keeps streams aligned across
            // noise settings
            let g: [f64; 4] = [
                rng_det.sample(StandardNormal),
                rng_det.sample(StandardNormal),
                rng_det.sample(StandardNormal),
                rng_det.sample(StandardNormal),
            ];
            let missed = rng_det.gen::<f64>() < config.miss_rate;

            let p = e.pos(t);
            let jittered = FieldPoint::new(
                p.x + config.jitter_m * g[0],
                p.y + config.jitter_m * g[1],
            );
            let img = cam.apply([jittered.x, jittered.y])?;
            let (u, v) = (
                img[0] + config.jitter_px * g[2],
                img[1] + config.jitter_px * g[3],
            );
            let (bx, by) = (u - box_w / 2.0, v - box_h);
            let visible =
                bx >= 0.0 && by >= 0.0 && bx + box_w <= 1920.0 && by + box_h <= 1080.0;
            if e.team == Team::Home && visible {
                stats.visible_home_player_frames += 1;
                if missed {
                    stats.missed_home_detections += 1;
                }
            }
            if !visible || missed {
                continue;
            }
            let crop_ref = config
                .write_crops
                .then(|| format!("crops/f{f:06}_{}.png", e.id));
            if let Some(cr) = &crop_ref {
                write_crop(&out_dir.join(cr), e.color, &mut rng_crops)?;
            }
            detections.push(Detection {
                frame_id: f,
                x: bx,
                y: by,
                w: box_w,
                h: box_h,
                crop_ref,
            });
        }
    }
    stats.detections_total = detections.len();
    let det_path = out_dir.join("detections.jsonl");
    formats::write_detections(&det_path, &detections)?;

    // sensor tracks: 100 Hz positions, every 10th row carries orientation
    let mut sensors: Vec<SensorSample> = Vec::new();
    let k_max = (config.duration_s * 100.0).ceil() as i64;
    for e in scenario.entities.iter().filter(|e| e.team == Team::Home) {
        for k in 0..=k_max {
            let t = k as f64 / 100.0;
            sensors.push(SensorSample {
                player_id: e.id.clone(),
                t: t + config.clock_offset_s,
                pos: field_to_geo(e.pos(t)),
                orient: (k % 10 == 0).then(|| e.euler(t)),
            });
        }
    }
    let sensor_path = out_dir.join("sensors.csv");
    formats::write_sensor_csv(&sensor_path, &sensors)?;

    // corner annotations: image-to-field every `annotation_stride` frames,
    // geo-to-field once
    let mut annotations: Vec<AnnotationRow> = Vec::new();
    let spots = scenario.annotation_spots();
    let mut f = 0;
    while f < scenario.n_frames {
        let cam = scenario.camera(f as f64 / fps)?;
        let mut in_frame = 0;
        for (label, spot) in &spots {
            let img = cam.apply([spot.x, spot.y])?;
            if ImagePoint::new(img[0], img[1]).in_frame(1920.0, 1080.0) {
                in_frame += 1;
                annotations.push(AnnotationRow {
                    frame_id: f,
                    label: label.clone(),
                    src_x: img[0],
                    src_y: img[1],
                    dst_x: spot.x,
                    dst_y: spot.y,
                    domain_pair: DomainPair::If,
                });
            }
        }
        if in_frame < 4 {
            return Err(SynthError::InvalidConfig(format!(
                "camera drift leaves fewer than 4 field spots visible at frame {f}"
            )));
        }
        stats.annotated_frames += 1;
        f += config.annotation_stride;
    }
    for (label, spot) in spots.iter().take(6) {
        let geo = field_to_geo(*spot);
        annotations.push(AnnotationRow {
            frame_id: 0,
            label: label.clone(),
            src_x: geo.lat,
            src_y: geo.lon,
            dst_x: spot.x,
            dst_y: spot.y,
            domain_pair: DomainPair::Sf,
        });
    }
    let ann_path = out_dir.join("annotations.csv");
    formats::write_annotations(&ann_path, &annotations)?;

    // truth sidecar: per home player-frame, the compensated orientation an
    // ideal pipeline would produce (10 Hz headings, shortest-arc resampling,
    // exact camera)
    let mut truth: Vec<TruthRow> = Vec::new();
    let j_max = k_max / 10;
    for f in 0..scenario.n_frames {
        let t = f as f64 / fps;
        let cam = scenario.camera(t)?;
        let h_if_true = cam.inverse()?;
        for e in scenario.entities.iter().filter(|e| e.team == Team::Home) {
            let j = (((t * 10.0).floor() as i64).max(0)).min(j_max - 1);
            let (t0, t1) = (j as f64 / 10.0, (j + 1) as f64 / 10.0);
            let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let heading = circular_interpolate(e.heading(t0), e.heading(t1), u)
                .expect("u clamped to [0, 1]")
                .angle;
            let p = e.pos(t);
            let img = cam.apply([p.x, p.y])?;
            let alpha = compensate_angle(heading, ImagePoint::new(img[0], img[1]), &h_if_true)?;
            truth.push(TruthRow {
                frame_id: f,
                player_id: e.id.clone(),
                true_alpha: alpha,
                true_field_pos: [p.x, p.y],
            });
        }
    }
    let truth_path = out_dir.join("truth.jsonl");
    formats::write_truth(&truth_path, &truth)?;

    let scenario_path = out_dir.join("scenario.json");
    let file = ScenarioFile {
        config,
        stats: &stats,
        geo_anchor: [GEO_ANCHOR.0, GEO_ANCHOR.1],
        convention: CONVENTION_NOTE,
    };
    let text = serde_json::to_string_pretty(&file).expect("scenario serializes");
    std::fs::write(&scenario_path, text + "\n").map_err(|e| SynthError::Io {
        path: scenario_path.display().to_string(),
        source: e,
    })?;

    Ok(GeneratedScenario {
        stats,
        paths: ScenarioPaths {
            detections: det_path,
            sensors: sensor_path,
            annotations: ann_path,
            truth: truth_path,
            scenario: scenario_path,
            crops_dir: config.write_crops.then_some(crops_dir),
        },
    })
}

/// Flat-color 12x20 jersey crop with mild per-pixel noise.
fn write_crop(path: &Path, color: [u8; 3], rng: &mut ChaCha8Rng) -> Result<(), SynthError> {
    const W: u32 = 12;
    const H: u32 = 20;
    let mut data = Vec::with_capacity((W * H * 3) as usize);
    for _ in 0..(W * H) {
        for c in color {
            let noisy = (c as i16 + rng.gen_range(-12i16..=12)).clamp(0, 255) as u8;
            data.push(noisy);
        }
    }
    let img = image::RgbImage::from_raw(W, H, data).expect("buffer sized for dimensions");
    img.save(path).map_err(|e| SynthError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })
}
