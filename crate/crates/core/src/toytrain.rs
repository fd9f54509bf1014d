//! Desk-scale training benchmark contrasting the cyclic soft-label loss with
//! plain one-hot cross-entropy.
//!
//! A linear softmax classifier over 16 features — noisy (cos, sin) of the
//! angle plus 14 nuisance dimensions — isolates the effect of the loss from
//! any architecture concern. Both arms share the dataset, the full-batch
//! gradient-descent loop, and the analytic gradient; only the target
//! distribution differs (soft labels versus one-hot at the true bin).

use crate::angles::{
    bin_of, cyclic_cross_entropy, cyclic_cross_entropy_grad, decode_angle, soft_labels, softmax,
    AnglesError, BinSet, DecodeMode, ProbVector, SoftLabels,
};
use crate::config::ToyConfig;
use crate::eval::{summarize, ErrorSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

pub const FEATURE_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum ToytrainError {
    #[error("training diverged at epoch {epoch}: loss {loss:.3} exceeds 10x initial {initial:.3}")]
    DivergenceDetected { epoch: usize, loss: f64, initial: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Angles(#[from] AnglesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Cyclic,
    OneHot,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::Cyclic => write!(f, "cyclic"),
            LossKind::OneHot => write!(f, "one-hot"),
        }
    }
}

/// Linear logits over the feature vector.
#[derive(Debug, Clone)]
pub struct ToyModel {
    /// k x d weight matrix.
    pub w: Vec<[f64; FEATURE_DIM]>,
    pub b: Vec<f64>,
}

impl ToyModel {
    fn init(k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..k)
            .map(|_| {
                let mut row = [0.0; FEATURE_DIM];
                for v in row.iter_mut() {
                    *v = 0.01 * rng.sample::<f64, _>(StandardNormal);
                }
                row
            })
            .collect();
        Self { w, b: vec![0.0; k] }
    }

    pub fn logits(&self, f: &[f64; FEATURE_DIM]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Feature vector for an angle: noisy (cos, sin) followed by pure-noise
/// nuisance dimensions. Deterministic for a fixed seed.
pub fn make_features(alpha_deg: f64, sigma: f64, seed: u64) -> [f64; FEATURE_DIM] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = [0.0; FEATURE_DIM];
    let a = alpha_deg.to_radians();
    f[0] = a.cos() + sigma * rng.sample::<f64, _>(StandardNormal);
    f[1] = a.sin() + sigma * rng.sample::<f64, _>(StandardNormal);
    for v in f.iter_mut().skip(2) {
        *v = rng.sample(StandardNormal);
    }
    f
}

#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub features: Vec<[f64; FEATURE_DIM]>,
    pub alphas: Vec<f64>,
}

/// Draw `n` uniform angles and their feature vectors.
pub fn make_dataset(n: usize, sigma: f64, seed: u64) -> ToyDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for _ in 0..n {
        let alpha: f64 = rng.gen_range(0.0..360.0);
        let sample_seed: u64 = rng.gen();
        alphas.push(alpha);
        features.push(make_features(alpha, sigma, sample_seed));
    }
    ToyDataset { features, alphas }
}

/// Full-batch gradient descent; returns the model and the per-epoch mean
/// loss history (loss measured before each update, so entry 0 is the
/// initial loss; zero epochs give an empty history).
///
/// The objective is convex, so for a small enough learning rate the history
/// is non-increasing; a loss exceeding ten times the initial value aborts as
/// divergence.
pub fn train(
    dataset: &ToyDataset,
    bins: &BinSet,
    loss: LossKind,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<(ToyModel, Vec<f64>), ToytrainError> {
    if dataset.features.is_empty() {
        return Err(ToytrainError::InvalidParameter("empty dataset".into()));
    }
    if !lr.is_finite() || lr <= 0.0 {
        return Err(ToytrainError::InvalidParameter(format!("lr must be positive, got {lr}")));
    }
    let k = bins.k();
    let n = dataset.features.len();
    let targets: Vec<SoftLabels> = dataset
        .alphas
        .iter()
        .map(|&a| match loss {
            LossKind::Cyclic => Ok(soft_labels(a, bins)),
            LossKind::OneHot => SoftLabels::one_hot(bin_of(a, bins), k),
        })
        .collect::<Result<_, _>>()?;

    let mut model = ToyModel::init(k, seed);
    let mut history = Vec::with_capacity(epochs);
    let mut spot_checked = false;

    for epoch in 0..epochs {
        let mut grad_w = vec![[0.0; FEATURE_DIM]; k];
        let mut grad_b = vec![0.0; k];
        let mut total_loss = 0.0;

        for (f, y) in dataset.features.iter().zip(&targets) {
            let logits = model.logits(f);
            let p = ProbVector::from_logits(&logits);
            total_loss += cyclic_cross_entropy(&p, y)?;
            let g = cyclic_cross_entropy_grad(&logits, y)?;
            if !spot_checked {
                // one runtime check per run that the shared gradient path
                // really is softmax(logits) - y
                let direct: Vec<f64> =
                    softmax(&logits).iter().zip(y.values()).map(|(p, y)| p - y).collect();
                for (a, b) in g.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12, "gradient path mismatch");
                }
                spot_checked = true;
            }
            for j in 0..k {
                grad_b[j] += g[j];
                for (w, x) in grad_w[j].iter_mut().zip(f) {
                    *w += g[j] * x;
                }
            }
        }

        let mean_loss = total_loss / n as f64;
        history.push(mean_loss);
        if mean_loss > 10.0 * history[0] {
            return Err(ToytrainError::DivergenceDetected {
                epoch,
                loss: mean_loss,
                initial: history[0],
            });
        }

        let scale = lr / n as f64;
        for j in 0..k {
            model.b[j] -= scale * grad_b[j];
            for (w, g) in model.w[j].iter_mut().zip(&grad_w[j]) {
                *w -= scale * g;
            }
        }
    }
    Ok((model, history))
}

/// Decode the model's predictions (argmax bin center) over a dataset.
pub fn predict(model: &ToyModel, dataset: &ToyDataset, bins: &BinSet) -> Vec<f64> {
    dataset
        .features
        .iter()
        .map(|f| {
            let p = ProbVector::from_logits(&model.logits(f));
            decode_angle(&p, bins, DecodeMode::ArgmaxCenter).expect("argmax decode is total")
        })
        .collect()
}

/// One (loss, seed) training arm with its test metrics and raw predictions.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub loss: LossKind,
    pub seed: u64,
    pub test_summary: ErrorSummary,
    pub final_train_loss: f64,
    pub preds_deg: Vec<f64>,
    pub truths_deg: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub rows: Vec<ArmResult>,
    pub mean_meae_cyclic: f64,
    pub mean_meae_onehot: f64,
    pub k: usize,
}

/// Run both loss arms across all configured seeds on shared per-seed
/// datasets.
pub fn run_experiment(config: &ToyConfig) -> Result<ExperimentResults, ToytrainError> {
    config.validate().map_err(ToytrainError::InvalidParameter)?;
    let bins = BinSet::new(config.k_bins)?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let train_set = make_dataset(config.n_train, config.sigma, seed);
        let test_set = make_dataset(config.n_test, config.sigma, seed ^ 0x7465_7374);
        for loss in [LossKind::Cyclic, LossKind::OneHot] {
            let (model, history) =
                train(&train_set, &bins, loss, config.epochs, config.lr, seed)?;
            let preds = predict(&model, &test_set, &bins);
            let summary = summarize(&preds, &test_set.alphas).expect("nonempty test set");
            rows.push(ArmResult {
                loss,
                seed,
                test_summary: summary,
                final_train_loss: history.last().copied().unwrap_or(f64::NAN),
                preds_deg: preds,
                truths_deg: test_set.alphas.clone(),
            });
        }
    }
    let mean = |kind: LossKind| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.loss == kind)
            .map(|r| r.test_summary.meae)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    Ok(ExperimentResults {
        mean_meae_cyclic: mean(LossKind::Cyclic),
        mean_meae_onehot: mean(LossKind::OneHot),
        k: config.k_bins,
        rows,
    })
}
