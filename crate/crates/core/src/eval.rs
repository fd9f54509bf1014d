//! Circular error metrics and confusion matrices.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("bin index {0} outside 1..={1}")]
    IndexOutOfRange(usize, usize),
}

/// Mean and median absolute angular error over a set of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    /// Mean absolute error, degrees.
    pub meae: f64,
    /// Median absolute error, degrees. Not ordered with respect to the mean.
    pub mdae: f64,
    pub n: usize,
}

/// Absolute angular error on the shortest arc, in `[0, 180]`.
pub fn angular_abs_error(pred_deg: f64, truth_deg: f64) -> f64 {
    crate::angles::shortest_arc_deg(pred_deg, truth_deg)
}

/// Summarize paired predictions and ground truths into MEAE/MDAE.
pub fn summarize(preds: &[f64], truths: &[f64]) -> Result<ErrorSummary, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::LengthMismatch(preds.len(), truths.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut errors: Vec<f64> = preds
        .iter()
        .zip(truths)
        .map(|(&p, &t)| angular_abs_error(p, t))
        .collect();
    let meae = errors.iter().sum::<f64>() / errors.len() as f64;
    errors.sort_by(|a, b| a.total_cmp(b));
    let n = errors.len();
    let mdae = if n % 2 == 1 {
        errors[n / 2]
    } else {
        (errors[n / 2 - 1] + errors[n / 2]) / 2.0
    };
    Ok(ErrorSummary { meae, mdae, n })
}

/// Row-is-truth, column-is-prediction count matrix over 1-based bin indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Count at (truth bin, predicted bin), both 1-based.
    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth - 1][pred - 1]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth - 1].iter().sum()
    }

    /// Fraction of samples on the diagonal or an adjacent (cyclically
    /// neighboring) bin. Tighter confusion concentrates mass here.
    pub fn tridiagonal_mass(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut hits = 0u64;
        for t in 0..self.k {
            for p in [t, (t + 1) % self.k, (t + self.k - 1) % self.k] {
                hits += self.counts[t][p];
            }
        }
        hits as f64 / total as f64
    }
}

/// Build a confusion matrix from paired 1-based bin indices.
pub fn confusion(preds: &[usize], truths: &[usize], k: usize) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::LengthMismatch(preds.len(), truths.len()));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in preds.iter().zip(truths) {
        if p < 1 || p > k {
            return Err(EvalError::IndexOutOfRange(p, k));
        }
        if t < 1 || t > k {
            return Err(EvalError::IndexOutOfRange(t, k));
        }
        counts[t - 1][p - 1] += 1;
    }
    Ok(ConfusionMatrix { k, counts })
}

/// One row of the results table; the validation columns are optional because
/// not every experiment has a validation split.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub meae_v: Option<f64>,
    pub mdae_v: Option<f64>,
    pub meae_t: f64,
    pub mdae_t: f64,
}

/// Write result rows as CSV with columns
/// `experiment,MEAE_v,MDAE_v,MEAE_t,MDAE_t`; absent values print as `-`.
pub fn write_results_csv<W: std::io::Write>(mut w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "experiment,MEAE_v,MDAE_v,MEAE_t,MDAE_t")?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6}",
            r.experiment,
            fmt(r.meae_v),
            fmt(r.mdae_v),
            r.meae_t,
            r.mdae_t
        )?;
    }
    Ok(())
}

/// Write a confusion matrix as a CSV grid with a header row/column of bin
/// indices.
pub fn write_confusion_csv<W: std::io::Write>(mut w: W, m: &ConfusionMatrix) -> std::io::Result<()> {
    write!(w, "truth\\pred")?;
    for p in 1..=m.k() {
        write!(w, ",b{p}")?;
    }
    writeln!(w)?;
    for t in 1..=m.k() {
        write!(w, "b{t}")?;
        for p in 1..=m.k() {
            write!(w, ",{}", m.count(t, p))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Write a confusion matrix as whitespace-separated `truth pred count`
/// triplets suitable for gnuplot heatmaps (`plot ... with image`).
pub fn write_confusion_gnuplot<W: std::io::Write>(mut w: W, m: &ConfusionMatrix) -> std::io::Result<()> {
    for t in 1..=m.k() {
        for p in 1..=m.k() {
            writeln!(w, "{t} {p} {}", m.count(t, p))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::{bin_of, soft_labels, decode_angle, BinSet, DecodeMode, ProbVector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn angular_error_named_cases() {
        assert_eq!(angular_abs_error(10.0, 350.0), 20.0);
        assert_eq!(angular_abs_error(90.0, 90.0), 0.0);
        assert_eq!(angular_abs_error(0.0, 180.0), 180.0);
    }

    #[test]
    fn summarize_hand_case() {
        let s = summarize(&[10.0, 20.0, 30.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.meae, 20.0);
        assert_eq!(s.mdae, 20.0);
        assert_eq!(s.n, 3);
    }

    #[test]
    fn summarize_perfect_predictions() {
        let v = [12.0, 250.0, 359.0];
        let s = summarize(&v, &v).unwrap();
        assert_eq!(s.meae, 0.0);
        assert_eq!(s.mdae, 0.0);
    }

    #[test]
    fn summarize_even_length_median() {
        let s = summarize(&[0.0, 10.0, 20.0, 100.0], &[0.0; 4]).unwrap();
        assert_eq!(s.mdae, 15.0);
    }

    #[test]
    fn summarize_errors() {
        assert!(matches!(summarize(&[], &[]), Err(EvalError::EmptyInput)));
        assert!(matches!(summarize(&[1.0], &[]), Err(EvalError::LengthMismatch(1, 0))));
    }

    #[test]
    fn quantization_error_monte_carlo() {
        // decode(one-hot(bin(angle))) against the angle itself: |U(-w/2, w/2)|
        let bins = BinSet::new(12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let truths: Vec<f64> = (0..20000).map(|_| rng.gen_range(0.0..360.0)).collect();
        let preds: Vec<f64> = truths.iter().map(|&a| bins.center(bin_of(a, &bins))).collect();
        let s = summarize(&preds, &truths).unwrap();
        assert!(preds.iter().zip(&truths).all(|(&p, &t)| angular_abs_error(p, t) <= 15.0));
        assert_relative_eq!(s.meae, 7.5, epsilon = 0.15);
        assert_relative_eq!(s.mdae, 7.5, epsilon = 0.25);
    }

    #[test]
    fn decoded_soft_labels_match_bin_centers() {
        let bins = BinSet::new(12).unwrap();
        let x = ProbVector::new(soft_labels(75.0, &bins).values().to_vec()).unwrap();
        let a = decode_angle(&x, &bins, DecodeMode::ArgmaxCenter).unwrap();
        assert_eq!(a, 75.0);
    }

    #[test]
    fn confusion_diagonal_and_shift() {
        let truths: Vec<usize> = (1..=12).cycle().take(120).collect();
        let perfect = confusion(&truths, &truths, 12).unwrap();
        for t in 1..=12 {
            for p in 1..=12 {
                assert_eq!(perfect.count(t, p), if t == p { 10 } else { 0 });
            }
        }
        let shifted: Vec<usize> = truths.iter().map(|&t| t % 12 + 1).collect();
        let m = confusion(&shifted, &truths, 12).unwrap();
        for t in 1..=12 {
            let p = t % 12 + 1;
            assert_eq!(m.count(t, p), 10);
        }
        assert_eq!(m.count(12, 1), 10, "wraps around the cycle");
        assert_eq!(m.total(), 120);
    }

    #[test]
    fn confusion_rejects_out_of_range() {
        assert!(matches!(confusion(&[13], &[1], 12), Err(EvalError::IndexOutOfRange(13, 12))));
        assert!(matches!(confusion(&[1], &[0], 12), Err(EvalError::IndexOutOfRange(0, 12))));
    }

    #[test]
    fn results_csv_shape() {
        let rows = vec![
            ResultRow { experiment: "t12".into(), meae_v: Some(1.0), mdae_v: Some(2.0), meae_t: 3.0, mdae_t: 4.0 },
            ResultRow { experiment: "tCV".into(), meae_v: None, mdae_v: None, meae_t: 5.5, mdae_t: 6.5 },
        ];
        let mut out = Vec::new();
        write_results_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "experiment,MEAE_v,MDAE_v,MEAE_t,MDAE_t");
        assert_eq!(lines.next().unwrap(), "t12,1.000000,2.000000,3.000000,4.000000");
        assert_eq!(lines.next().unwrap(), "tCV,-,-,5.500000,6.500000");
    }

    proptest! {
        #[test]
        fn angular_error_properties(a in -720.0f64..720.0, b in -720.0f64..720.0, k in -2i32..3) {
            let e = angular_abs_error(a, b);
            prop_assert!((0.0..=180.0).contains(&e));
            prop_assert!((e - angular_abs_error(b, a)).abs() < 1e-9);
            prop_assert!((e - angular_abs_error(a + 360.0 * k as f64, b)).abs() < 1e-6);
        }

        #[test]
        fn summarize_is_permutation_invariant(seed in 0u64..100) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..40);
            let pairs: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(0.0..360.0), rng.gen_range(0.0..360.0))).collect();
            let mut shuffled = pairs.clone();
            for i in (1..shuffled.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled.swap(i, j);
            }
            let (p1, t1): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (p2, t2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            let a = summarize(&p1, &t1).unwrap();
            let b = summarize(&p2, &t2).unwrap();
            prop_assert!((a.meae - b.meae).abs() < 1e-9);
            prop_assert!((a.mdae - b.mdae).abs() < 1e-9);
        }

        #[test]
        fn confusion_row_sums_match_class_histogram(seed in 0u64..100) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = 12;
            let n = rng.gen_range(1..200);
            let truths: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
            let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
            let m = confusion(&preds, &truths, k).unwrap();
            prop_assert_eq!(m.total() as usize, n);
            for t in 1..=k {
                let hist = truths.iter().filter(|&&v| v == t).count();
                prop_assert_eq!(m.row_sum(t) as usize, hist);
            }
        }
    }
}
