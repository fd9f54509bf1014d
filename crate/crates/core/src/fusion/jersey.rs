//! Jersey-color features and team clustering.
//!
//! Each detection crop becomes a 48-feature vector: 8-bin histograms of the
//! three HSV channels and the three LAB channels, each 24-entry half
//! L1-normalized on its own. A K-means model with K=3 separates home team,
//! away team, and outliers (referees, partial boxes); roles are assigned by
//! descending cluster size with the smallest cluster as outlier.

use super::FusionError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;

pub const FEATURE_LEN: usize = 48;
const BINS_PER_CHANNEL: usize = 8;

/// 8-bit RGB raster, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbCrop {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbCrop {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FusionError> {
        if width == 0 || height == 0 || data.is_empty() {
            return Err(FusionError::EmptyCrop);
        }
        if data.len() != width * height * 3 {
            return Err(FusionError::InvalidDetection(format!(
                "crop buffer length {} does not match {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }
}

/// Concatenated quantized HSV then LAB histograms; each 24-entry half sums
/// to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JerseyFeature(pub(crate) [f64; FEATURE_LEN]);

impl JerseyFeature {
    pub fn values(&self) -> &[f64; FEATURE_LEN] {
        &self.0
    }
}

/// Compute the jersey feature for a crop.
pub fn jersey_feature(crop: &RgbCrop) -> Result<JerseyFeature, FusionError> {
    let mut hsv_hist = [0u64; 24];
    let mut lab_hist = [0u64; 24];
    for [r, g, b] in crop.pixels() {
        let (h, s, v) = rgb_to_hsv(r, g, b);
        hsv_hist[quantize_unit(h / 360.0)] += 1;
        hsv_hist[8 + quantize_unit(s)] += 1;
        hsv_hist[16 + quantize_unit(v)] += 1;
        let (l, a, bb) = rgb_to_lab(r, g, b);
        lab_hist[quantize_unit(l / 100.0)] += 1;
        lab_hist[8 + quantize_unit((a + 128.0) / 256.0)] += 1;
        lab_hist[16 + quantize_unit((bb + 128.0) / 256.0)] += 1;
    }
    let mut out = [0.0; FEATURE_LEN];
    let half_total = (crop.width * crop.height * 3) as f64;
    for i in 0..24 {
        out[i] = hsv_hist[i] as f64 / half_total;
        out[24 + i] = lab_hist[i] as f64 / half_total;
    }
    Ok(JerseyFeature(out))
}

fn quantize_unit(v: f64) -> usize {
    ((v * BINS_PER_CHANNEL as f64) as usize).min(BINS_PER_CHANNEL - 1)
}

/// RGB in 0..=255 to (hue degrees [0,360), saturation [0,1], value [0,1]).
fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h.rem_euclid(360.0), s, max)
}

/// sRGB (D65) to CIE LAB; L in [0,100], a/b roughly within [-128, 128].
fn rgb_to_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    fn linearize(c: f64) -> f64 {
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    }
    let r = linearize(r as f64 / 255.0);
    let g = linearize(g as f64 / 255.0);
    let b = linearize(b as f64 / 255.0);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    // D65 white point
    let (xn, yn, zn) = (0.95047, 1.0, 1.08883);
    fn f(t: f64) -> f64 {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let (fx, fy, fz) = (f(x / xn), f(y / yn), f(z / zn));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Grayscale plane of a crop using 0.299/0.587/0.114 luminance weights.
pub fn to_grayscale(crop: &RgbCrop) -> Vec<u8> {
    crop.pixels()
        .map(|[r, g, b]| {
            (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round().clamp(0.0, 255.0) as u8
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Home,
    Away,
    Outlier,
}

/// Fitted K-means model over jersey features with cluster roles.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    centroids: Vec<[f64; FEATURE_LEN]>,
    counts: Vec<usize>,
    roles: Vec<Role>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn role_of(&self, cluster: usize) -> Role {
        self.roles[cluster]
    }

    pub fn centroid(&self, cluster: usize) -> &[f64; FEATURE_LEN] {
        &self.centroids[cluster]
    }

    /// Force a specific cluster to be the home team; remaining clusters are
    /// relabeled by size (larger = away, smallest = outlier).
    pub fn override_home(&mut self, home: usize) {
        let mut rest: Vec<usize> = (0..self.k()).filter(|&c| c != home).collect();
        rest.sort_by_key(|&c| std::cmp::Reverse(self.counts[c]));
        self.roles = vec![Role::Outlier; self.k()];
        self.roles[home] = Role::Home;
        for (rank, &c) in rest.iter().enumerate() {
            self.roles[c] = if rank + 1 < rest.len() { Role::Away } else { Role::Outlier };
        }
    }

    /// Nearest centroid and its role.
    pub fn assign(&self, f: &JerseyFeature) -> (usize, Role) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in self.centroids.iter().enumerate() {
            let d = dist2(&f.0, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        (best, self.roles[best])
    }
}

fn dist2(a: &[f64; FEATURE_LEN], b: &[f64; FEATURE_LEN]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's K-means with k-means++ seeding over jersey features.
///
/// Inputs are canonicalized by sorting before any random choice, so the fit
/// is invariant to input order for a fixed seed. Runs at most 300 iterations
/// or until the largest centroid shift drops below 1e-6. Roles are assigned
/// by descending member count: largest cluster is the home team, smallest is
/// the outlier bucket.
pub fn fit_jersey_clusters(
    features: &[JerseyFeature],
    k: usize,
    seed: u64,
) -> Result<ClusterModel, FusionError> {
    let n = features.len();
    if n < k || k == 0 {
        return Err(FusionError::TooFewSamples { k, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        features[a]
            .0
            .iter()
            .zip(features[b].0.iter())
            .find_map(|(x, y)| {
                let c = x.total_cmp(y);
                (c != std::cmp::Ordering::Equal).then_some(c)
            })
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let pts: Vec<&[f64; FEATURE_LEN]> = order.iter().map(|&i| &features[i].0).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<[f64; FEATURE_LEN]> = Vec::with_capacity(k);
    centroids.push(*pts[rng.gen_range(0..n)]);
    let mut d2: Vec<f64> = pts.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all points coincide with existing centroids; take any
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(*pts[next]);
        for (i, p) in pts.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, centroids.last().unwrap()));
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..300 {
        for (i, p) in pts.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist2(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }
        let mut sums = vec![[0.0; FEATURE_LEN]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in pts.iter().enumerate() {
            let c = assignment[i];
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut max_shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue; // empty cluster keeps its previous centroid
            }
            let mut new_c = sums[c];
            for v in new_c.iter_mut() {
                *v /= counts[c] as f64;
            }
            max_shift = max_shift.max(dist2(&new_c, &centroids[c]).sqrt());
            centroids[c] = new_c;
        }
        if max_shift < 1e-6 {
            break;
        }
    }

    let mut counts = vec![0usize; k];
    for &c in &assignment {
        counts[c] += 1;
    }
    // roles by descending size, stable on ties
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by_key(|&c| std::cmp::Reverse(counts[c]));
    let mut roles = vec![Role::Outlier; k];
    for (rank, &c) in by_size.iter().enumerate() {
        roles[c] = if rank == 0 {
            Role::Home
        } else if rank + 1 == k {
            Role::Outlier
        } else {
            Role::Away
        };
    }

    Ok(ClusterModel { centroids, counts, roles })
}

/// Source of detection crops, keyed by the detection's `crop_ref`.
pub trait CropSource: Sync {
    fn load(&self, crop_ref: &str) -> Option<RgbCrop>;
}

/// No crops available; jersey filtering is skipped.
pub struct NoCrops;

impl CropSource for NoCrops {
    fn load(&self, _: &str) -> Option<RgbCrop> {
        None
    }
}

/// Loads crops from image files relative to a base directory.
pub struct DirCropSource {
    base: PathBuf,
}

impl DirCropSource {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Self { base: base.into() }
    }
}

impl CropSource for DirCropSource {
    fn load(&self, crop_ref: &str) -> Option<RgbCrop> {
        let img = image::open(self.base.join(crop_ref)).ok()?.to_rgb8();
        RgbCrop::new(img.width() as usize, img.height() as usize, img.into_raw()).ok()
    }
}

/// In-memory crops, mainly for tests.
pub struct MemCropSource(pub std::collections::HashMap<String, RgbCrop>);

impl CropSource for MemCropSource {
    fn load(&self, crop_ref: &str) -> Option<RgbCrop> {
        self.0.get(crop_ref).cloned()
    }
}
