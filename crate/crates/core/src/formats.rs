//! On-disk file formats: annotation CSV, homography JSON, detection and
//! record JSONL, sensor CSV, dataset manifests, and truth sidecars.
//!
//! JSONL files carry full-precision floats so a written dataset reloads
//! bit-exactly; manifest angles and CSV metric exports are rounded to six
//! decimal places.

use crate::angles::BinSet;
use crate::fusion::{BuildReport, Detection, HomographySet, MatchedRecord, SensorSample};
use crate::geometry::{Domain, FieldPoint, GeoPoint, Homography, ImagePoint};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    fn invalid(path: &Path, msg: impl Into<String>) -> Self {
        Self::Invalid { path: path.display().to_string(), msg: msg.into() }
    }
}

/// Round to six decimal places; used for angles in manifests and metric
/// exports.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

// ---------------------------------------------------------------------------
// generic JSONL

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FormatError> {
    let file = std::fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| FormatError::invalid(path, format!("line {}: {e}", lineno + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)
            .map_err(|e| FormatError::invalid(path, e.to_string()))?;
        writeln!(w).map_err(|e| FormatError::io(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

// ---------------------------------------------------------------------------
// corner annotations

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DomainPair {
    /// Image to field.
    #[serde(rename = "IF")]
    If,
    /// Sensor (geo) to field; `src_x` is latitude, `src_y` longitude.
    #[serde(rename = "SF")]
    Sf,
}

/// One manually annotated point pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub frame_id: i64,
    pub label: String,
    pub src_x: f64,
    pub src_y: f64,
    pub dst_x: f64,
    pub dst_y: f64,
    pub domain_pair: DomainPair,
}

/// Ingestion bounds for annotation and detection validation.
#[derive(Debug, Clone, Copy)]
pub struct IngestLimits {
    pub frame_width: f64,
    pub frame_height: f64,
    pub field_length_m: f64,
    pub field_width_m: f64,
}

impl Default for IngestLimits {
    fn default() -> Self {
        Self { frame_width: 1920.0, frame_height: 1080.0, field_length_m: 105.0, field_width_m: 68.0 }
    }
}

pub fn read_annotations(
    path: &Path,
    limits: Option<&IngestLimits>,
) -> Result<Vec<AnnotationRow>, FormatError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        FormatError::invalid(path, e.to_string())
    })?;
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<AnnotationRow>().enumerate() {
        let row = record.map_err(|e| FormatError::invalid(path, format!("row {}: {e}", i + 2)))?;
        if [row.src_x, row.src_y, row.dst_x, row.dst_y].iter().any(|v| !v.is_finite()) {
            return Err(FormatError::invalid(path, format!("row {}: non-finite value", i + 2)));
        }
        if let Some(l) = limits {
            let dst_ok = FieldPoint::new(row.dst_x, row.dst_y)
                .in_bounds(l.field_length_m, l.field_width_m);
            if !dst_ok {
                return Err(FormatError::invalid(
                    path,
                    format!("row {}: field point ({}, {}) out of bounds", i + 2, row.dst_x, row.dst_y),
                ));
            }
            match row.domain_pair {
                DomainPair::If => {
                    if !ImagePoint::new(row.src_x, row.src_y).in_frame(l.frame_width, l.frame_height) {
                        return Err(FormatError::invalid(
                            path,
                            format!(
                                "row {}: image point ({}, {}) outside {}x{} frame",
                                i + 2, row.src_x, row.src_y, l.frame_width, l.frame_height
                            ),
                        ));
                    }
                }
                DomainPair::Sf => {
                    GeoPoint::new(row.src_x, row.src_y).map_err(|e| {
                        FormatError::invalid(path, format!("row {}: {e}", i + 2))
                    })?;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_annotations(path: &Path, rows: &[AnnotationRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

// ---------------------------------------------------------------------------
// homography JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomographyEntry {
    pub frame_id: i64,
    /// Row-major 3x3 matrix, bottom-right entry 1.
    pub m: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomographyFile {
    pub src_domain: Domain,
    pub dst_domain: Domain,
    pub frames: Vec<HomographyEntry>,
}

impl HomographyFile {
    pub fn from_homographies(entries: &[(i64, Homography)]) -> Option<Self> {
        let first = entries.first()?;
        Some(Self {
            src_domain: first.1.src_domain(),
            dst_domain: first.1.dst_domain(),
            frames: entries
                .iter()
                .map(|(f, h)| HomographyEntry { frame_id: *f, m: h.to_row_major() })
                .collect(),
        })
    }

    pub fn to_homographies(&self) -> Result<Vec<(i64, Homography)>, String> {
        self.frames
            .iter()
            .map(|e| {
                Homography::from_row_major(e.m, self.src_domain, self.dst_domain)
                    .map(|h| (e.frame_id, h))
                    .map_err(|err| format!("frame {}: {err}", e.frame_id))
            })
            .collect()
    }
}

pub fn write_homography_file(path: &Path, file: &HomographyFile) -> Result<(), FormatError> {
    let out = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, file)
        .map_err(|e| FormatError::invalid(path, e.to_string()))?;
    writeln!(w).map_err(|e| FormatError::io(path, e))?;
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn read_homography_file(path: &Path) -> Result<HomographyFile, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| FormatError::invalid(path, e.to_string()))
}

/// Load the per-frame image-to-field file plus the geo-to-field file into a
/// pipeline-ready set. The geo-to-field map is frame-independent; the first
/// entry is used.
pub fn load_homography_set(h_if: &Path, h_sf: &Path) -> Result<HomographySet, FormatError> {
    let if_file = read_homography_file(h_if)?;
    let sf_file = read_homography_file(h_sf)?;
    let if_frames = if_file
        .to_homographies()
        .map_err(|msg| FormatError::invalid(h_if, msg))?;
    let sf = sf_file
        .to_homographies()
        .map_err(|msg| FormatError::invalid(h_sf, msg))?
        .into_iter()
        .next()
        .map(|(_, h)| h)
        .ok_or_else(|| FormatError::invalid(h_sf, "no homography entries"))?;
    HomographySet::new(if_frames, sf).map_err(|e| FormatError::invalid(h_if, e.to_string()))
}

// ---------------------------------------------------------------------------
// detections and records

pub fn read_detections(
    path: &Path,
    limits: Option<&IngestLimits>,
) -> Result<Vec<Detection>, FormatError> {
    let raw: Vec<Detection> = read_jsonl(path)?;
    match limits {
        None => Ok(raw),
        Some(l) => raw
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                d.clamped(l.frame_width, l.frame_height)
                    .map_err(|e| FormatError::invalid(path, format!("line {}: {e}", i + 1)))
            })
            .collect(),
    }
}

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<(), FormatError> {
    write_jsonl(path, detections)
}

pub fn read_records(path: &Path) -> Result<Vec<MatchedRecord>, FormatError> {
    read_jsonl(path)
}

pub fn write_records(path: &Path, records: &[MatchedRecord]) -> Result<(), FormatError> {
    write_jsonl(path, records)
}

// ---------------------------------------------------------------------------
// sensor CSV

const SENSOR_HEADER: [&str; 7] = ["player_id", "t_seconds", "lat", "lon", "roll", "pitch", "yaw"];

/// Read a sensor track CSV. Orientation columns are either all present
/// (10 Hz rows) or all empty (100 Hz position-only rows).
pub fn read_sensor_csv(path: &Path) -> Result<Vec<SensorSample>, FormatError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| FormatError::invalid(path, e.to_string()))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != SENSOR_HEADER {
            return Err(FormatError::invalid(
                path,
                format!("expected header {SENSOR_HEADER:?}, got {got:?}"),
            ));
        }
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FormatError::invalid(path, format!("row {}: {e}", i + 2)))?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let parse = |idx: usize, name: &str| -> Result<f64, FormatError> {
            field(idx).parse::<f64>().map_err(|_| {
                FormatError::invalid(path, format!("row {}: bad {name} value {:?}", i + 2, field(idx)))
            })
        };
        let player_id = field(0).to_string();
        if player_id.is_empty() {
            return Err(FormatError::invalid(path, format!("row {}: empty player_id", i + 2)));
        }
        let t = parse(1, "t_seconds")?;
        let lat = parse(2, "lat")?;
        let lon = parse(3, "lon")?;
        let pos = GeoPoint::new(lat, lon)
            .map_err(|e| FormatError::invalid(path, format!("row {}: {e}", i + 2)))?;
        let orient_fields = [field(4), field(5), field(6)];
        let empties = orient_fields.iter().filter(|f| f.is_empty()).count();
        let orient = match empties {
            3 => None,
            0 => Some(crate::angles::EulerOrientation::new(
                parse(4, "roll")?,
                parse(5, "pitch")?,
                parse(6, "yaw")?,
            )),
            _ => {
                return Err(FormatError::invalid(
                    path,
                    format!("row {}: orientation columns must be all present or all empty", i + 2),
                ))
            }
        };
        out.push(SensorSample { player_id, t, pos, orient });
    }
    Ok(out)
}

pub fn write_sensor_csv(path: &Path, samples: &[SensorSample]) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", SENSOR_HEADER.join(",")).map_err(|e| FormatError::io(path, e))?;
    for s in samples {
        // lat/lon carry sub-millimeter precision; angles nine decimals
        let orient = match &s.orient {
            Some(e) => format!("{:.9},{:.9},{:.9}", e.roll_x, e.pitch_y, e.yaw_z),
            None => ",,".to_string(),
        };
        writeln!(
            w,
            "{},{:.6},{:.12},{:.12},{}",
            s.player_id, s.t, s.pos.lat, s.pos.lon, orient
        )
        .map_err(|e| FormatError::io(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

// ---------------------------------------------------------------------------
// truth sidecar and manifest

/// Ground-truth sidecar row emitted by the scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub frame_id: i64,
    pub player_id: String,
    /// Compensated orientation an ideal pipeline would produce.
    pub true_alpha: f64,
    pub true_field_pos: [f64; 2],
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>, FormatError> {
    read_jsonl(path)
}

pub fn write_truth(path: &Path, rows: &[TruthRow]) -> Result<(), FormatError> {
    write_jsonl(path, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsManifest {
    pub k: usize,
    pub width: f64,
    pub centers: Vec<f64>,
}

impl From<&BinSet> for BinsManifest {
    fn from(b: &BinSet) -> Self {
        Self {
            k: b.k(),
            width: round6(b.width()),
            centers: b.centers().iter().map(|&c| round6(c)).collect(),
        }
    }
}

/// Brightness/contrast augmentation ranges recorded for downstream trainers
/// (uniform multiplicative deltas).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub brightness_delta: f64,
    pub contrast_delta: f64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self { brightness_delta: 0.2, contrast_delta: 0.2 }
    }
}

/// Dataset manifest written next to the records JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub bins: BinsManifest,
    pub convention: String,
    pub grayscale: bool,
    pub augmentation: AugmentationSpec,
    pub counts: BuildReport,
    pub config_hash: String,
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<(), FormatError> {
    let out = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, manifest)
        .map_err(|e| FormatError::invalid(path, e.to_string()))?;
    writeln!(w).map_err(|e| FormatError::io(path, e))?;
    w.flush().map_err(|e| FormatError::io(path, e))
}

// ---------------------------------------------------------------------------
// evaluation records

/// Minimal record for metric computation, readable from dataset records
/// (`alpha_compensated`), truth sidecars (`true_alpha`), or plain prediction
/// files (`alpha`).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub frame_id: i64,
    pub player_id: String,
    pub alpha: f64,
}

#[derive(Deserialize)]
struct RawEvalRecord {
    frame_id: i64,
    player_id: String,
    #[serde(default)]
    alpha_compensated: Option<f64>,
    #[serde(default)]
    true_alpha: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
}

pub fn read_eval_records(path: &Path) -> Result<Vec<EvalRecord>, FormatError> {
    let raw: Vec<RawEvalRecord> = read_jsonl(path)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let alpha = r
                .alpha_compensated
                .or(r.true_alpha)
                .or(r.alpha)
                .ok_or_else(|| {
                    FormatError::invalid(
                        path,
                        format!("line {}: no alpha_compensated/true_alpha/alpha field", i + 1),
                    )
                })?;
            Ok(EvalRecord { frame_id: r.frame_id, player_id: r.player_id, alpha })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::EulerOrientation;

    #[test]
    fn detections_round_trip_with_clamping() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let dets = vec![
            Detection { frame_id: 1, x: 10.5, y: 20.25, w: 16.0, h: 34.0, crop_ref: Some("c/a.png".into()) },
            Detection { frame_id: 2, x: -4.0, y: 0.0, w: 20.0, h: 30.0, crop_ref: None },
        ];
        write_detections(&path, &dets).unwrap();
        let plain = read_detections(&path, None).unwrap();
        assert_eq!(plain, dets);
        let clamped = read_detections(&path, Some(&IngestLimits::default())).unwrap();
        assert_eq!(clamped[0], dets[0]);
        assert_eq!(clamped[1].x, 0.0);
        assert_eq!(clamped[1].w, 16.0);
    }

    #[test]
    fn sensor_csv_round_trip_mixed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let samples = vec![
            SensorSample {
                player_id: "h00".into(),
                t: 0.0,
                pos: GeoPoint::new(41.380898, 2.12282).unwrap(),
                orient: Some(EulerOrientation::new(1.5, -3.25, 120.125)),
            },
            SensorSample {
                player_id: "h00".into(),
                t: 0.01,
                pos: GeoPoint::new(41.380899, 2.122821).unwrap(),
                orient: None,
            },
        ];
        write_sensor_csv(&path, &samples).unwrap();
        let back = read_sensor_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].player_id, "h00");
        assert!(back[1].orient.is_none());
        let o = back[0].orient.as_ref().unwrap();
        assert!((o.yaw_z - 120.125).abs() < 1e-9);
        assert!((back[0].pos.lat - 41.380898).abs() < 1e-12);
    }

    #[test]
    fn sensor_csv_rejects_partial_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(
            &path,
            "player_id,t_seconds,lat,lon,roll,pitch,yaw\nh00,0.0,41.0,2.0,1.0,,\n",
        )
        .unwrap();
        assert!(read_sensor_csv(&path).is_err());
    }

    #[test]
    fn annotations_validate_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let rows = vec![AnnotationRow {
            frame_id: 0,
            label: "corner_NW".into(),
            src_x: 100.0,
            src_y: 200.0,
            dst_x: 0.0,
            dst_y: 0.0,
            domain_pair: DomainPair::If,
        }];
        write_annotations(&path, &rows).unwrap();
        assert_eq!(read_annotations(&path, Some(&IngestLimits::default())).unwrap(), rows);

        let bad = vec![AnnotationRow { src_x: 5000.0, ..rows[0].clone() }];
        write_annotations(&path, &bad).unwrap();
        assert!(read_annotations(&path, Some(&IngestLimits::default())).is_err());
        assert!(read_annotations(&path, None).is_ok());
    }

    #[test]
    fn homography_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h_if.json");
        let h = Homography::from_row_major(
            [0.05, 0.001, -2.0, 0.0, 0.06, -1.0, 1e-5, 0.0, 1.0],
            Domain::Image,
            Domain::Field,
        )
        .unwrap();
        let file = HomographyFile::from_homographies(&[(0, h.clone()), (37, h.clone())]).unwrap();
        write_homography_file(&path, &file).unwrap();
        let back = read_homography_file(&path).unwrap();
        assert_eq!(back, file);
        let hs = back.to_homographies().unwrap();
        assert_eq!(hs[1].0, 37);
        assert_eq!(hs[0].1.to_row_major(), h.to_row_major());
    }

    #[test]
    fn eval_records_accept_multiple_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"frame_id":0,"player_id":"a","alpha_compensated":10.0}"#, "\n",
                r#"{"frame_id":0,"player_id":"b","true_alpha":20.0}"#, "\n",
                r#"{"frame_id":1,"player_id":"a","alpha":30.0}"#, "\n",
            ),
        )
        .unwrap();
        let recs = read_eval_records(&path).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].alpha, 10.0);
        assert_eq!(recs[1].alpha, 20.0);
        assert_eq!(recs[2].alpha, 30.0);
    }

    #[test]
    fn round6_behavior() {
        assert_eq!(round6(51.428571428), 51.428571);
        assert_eq!(round6(15.0), 15.0);
    }
}
