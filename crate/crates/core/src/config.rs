//! Configuration structures for the pipeline stages and the CLI.
//!
//! Config files may be TOML or JSON (decided by extension); unknown keys are
//! rejected so typos fail loudly instead of silently using defaults.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Parse a TOML (`.toml`) or JSON (anything else) config file.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let is_toml = path.extension().map_or(false, |e| e.eq_ignore_ascii_case("toml"));
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|msg| ConfigError::Parse {
        path: path.display().to_string(),
        msg,
    })
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn default_frame_width() -> f64 {
    1920.0
}

fn default_frame_height() -> f64 {
    1080.0
}

fn default_true() -> bool {
    true
}

/// Dataset-build configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    /// Maximum detection-player pairing distance in meters.
    pub gate_m: f64,
    pub fps: f64,
    /// Sensor clock minus video clock, in seconds. Supplied, not estimated.
    pub clock_offset_s: f64,
    pub field_length_m: f64,
    pub field_width_m: f64,
    pub k_bins: usize,
    pub seed: u64,
    #[serde(default = "default_frame_width")]
    pub frame_width: f64,
    #[serde(default = "default_frame_height")]
    pub frame_height: f64,
    /// Record (and apply, when exporting crops) grayscale conversion.
    #[serde(default = "default_true")]
    pub grayscale: bool,
    #[serde(default = "default_true")]
    pub jersey_filter: bool,
    /// Force this cluster index to be the home team instead of picking the
    /// largest cluster.
    #[serde(default)]
    pub home_cluster: Option<usize>,
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.gate_m.is_finite() || self.gate_m <= 0.0 {
            return Err(format!("gate_m must be positive, got {}", self.gate_m));
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            return Err(format!("fps must be positive, got {}", self.fps));
        }
        if !self.clock_offset_s.is_finite() {
            return Err("clock_offset_s must be finite".into());
        }
        if self.field_length_m <= 0.0 || self.field_width_m <= 0.0 {
            return Err("field dimensions must be positive".into());
        }
        if self.k_bins < 2 {
            return Err(format!("k_bins must be at least 2, got {}", self.k_bins));
        }
        if self.frame_width <= 0.0 || self.frame_height <= 0.0 {
            return Err("frame dimensions must be positive".into());
        }
        Ok(())
    }

    /// Hash of the canonical JSON serialization; stamped into manifests so a
    /// dataset is traceable to the exact configuration that produced it.
    pub fn config_hash(&self) -> String {
        sha256_json(self)
    }

    /// A reasonable default configuration (full-HD video, standard pitch).
    pub fn example() -> Self {
        Self {
            gate_m: 2.0,
            fps: 25.0,
            clock_offset_s: 0.0,
            field_length_m: 105.0,
            field_width_m: 68.0,
            k_bins: 12,
            seed: 0,
            frame_width: 1920.0,
            frame_height: 1080.0,
            grayscale: true,
            jersey_filter: true,
            home_cluster: None,
        }
    }
}

fn default_fps() -> f64 {
    25.0
}

fn default_field_length() -> f64 {
    105.0
}

fn default_field_width() -> f64 {
    68.0
}

fn default_annotation_stride() -> i64 {
    37
}

fn default_min_spacing() -> f64 {
    4.0
}

fn default_n_outliers() -> usize {
    1
}

/// Synthetic-scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Sensor-carrying (home) players.
    pub n_players: usize,
    pub duration_s: f64,
    /// Opponent players: detected, never sensor-tracked. Defaults to about
    /// two thirds of the home count so cluster sizes stay distinguishable.
    #[serde(default)]
    pub n_away: Option<usize>,
    #[serde(default = "default_n_outliers")]
    pub n_outliers: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_field_length")]
    pub field_length_m: f64,
    #[serde(default = "default_field_width")]
    pub field_width_m: f64,
    #[serde(default)]
    pub seed: u64,
    /// Gaussian jitter applied to the detection position in image pixels.
    #[serde(default)]
    pub jitter_px: f64,
    /// Gaussian jitter applied to the detection position on the field plane,
    /// in meters, before projecting to the image.
    #[serde(default)]
    pub jitter_m: f64,
    /// Probability that a visible player produces no detection in a frame.
    #[serde(default)]
    pub miss_rate: f64,
    /// Sensor clock minus video clock, in seconds.
    #[serde(default)]
    pub clock_offset_s: f64,
    /// Camera pan drift amplitude in pixels; 0 keeps the camera static.
    #[serde(default)]
    pub pan_amplitude_px: f64,
    /// Camera zoom drift amplitude (relative); 0 keeps the camera static.
    #[serde(default)]
    pub zoom_amplitude: f64,
    #[serde(default = "default_annotation_stride")]
    pub annotation_stride: i64,
    /// Minimum pairwise player distance guaranteed over the whole scenario.
    #[serde(default = "default_min_spacing")]
    pub min_spacing_m: f64,
    #[serde(default = "default_true")]
    pub write_crops: bool,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_players < 1 {
            return Err(format!("n_players must be at least 1, got {}", self.n_players));
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            return Err(format!("fps must be positive, got {}", self.fps));
        }
        if self.field_length_m <= 0.0 || self.field_width_m <= 0.0 {
            return Err("field dimensions must be positive".into());
        }
        if self.jitter_px < 0.0 || self.jitter_m < 0.0 {
            return Err("jitter must be nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.miss_rate) {
            return Err(format!("miss_rate must be in [0, 1), got {}", self.miss_rate));
        }
        if !self.clock_offset_s.is_finite() {
            return Err("clock_offset_s must be finite".into());
        }
        if self.annotation_stride < 1 {
            return Err("annotation_stride must be at least 1".into());
        }
        if self.min_spacing_m < 0.0 {
            return Err("min_spacing_m must be nonnegative".into());
        }
        Ok(())
    }

    pub fn away_count(&self) -> usize {
        self.n_away.unwrap_or_else(|| (self.n_players * 2 / 3).max(1))
    }

    pub fn example() -> Self {
        Self {
            n_players: 10,
            duration_s: 60.0,
            n_away: None,
            n_outliers: 1,
            fps: 25.0,
            field_length_m: 105.0,
            field_width_m: 68.0,
            seed: 0,
            jitter_px: 0.0,
            jitter_m: 0.0,
            miss_rate: 0.0,
            clock_offset_s: 0.0,
            pan_amplitude_px: 0.0,
            zoom_amplitude: 0.0,
            annotation_stride: 37,
            min_spacing_m: 4.0,
            write_crops: true,
        }
    }
}

fn default_k_bins() -> usize {
    12
}

fn default_sigma() -> f64 {
    0.1
}

fn default_n_train() -> usize {
    2400
}

fn default_n_test() -> usize {
    1200
}

fn default_epochs() -> usize {
    500
}

fn default_lr() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

/// Toy-training experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    #[serde(default = "default_k_bins")]
    pub k_bins: usize,
    /// Gaussian noise on the angle feature channels.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Also write per-sample prediction/truth JSONL files per arm.
    #[serde(default)]
    pub emit_predictions: bool,
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k_bins < 2 {
            return Err(format!("k_bins must be at least 2, got {}", self.k_bins));
        }
        if self.sigma < 0.0 {
            return Err("sigma must be nonnegative".into());
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err("n_train and n_test must be positive".into());
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(format!("lr must be positive, got {}", self.lr));
        }
        if self.seeds.is_empty() {
            return Err("at least one seed required".into());
        }
        Ok(())
    }
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            k_bins: default_k_bins(),
            sigma: default_sigma(),
            n_train: default_n_train(),
            n_test: default_n_test(),
            epochs: default_epochs(),
            lr: default_lr(),
            seeds: default_seeds(),
            emit_predictions: false,
        }
    }
}
