//! Classification metrics over labeled predictions: accuracy, F1, ROC
//! curve with area, and a calibration curve.
//!
//! Every prediction carries the ground truth, the hard label, and a score
//! in `[0, 1]` expressing the predicted probability that the item is Real.
//! Ranking metrics (ROC) sweep a threshold over the score of the chosen
//! positive class with ties grouped, so strictly monotone score transforms
//! leave the curve and area unchanged.

use alloc::vec::Vec;

use crate::label::Label;

/// Default number of calibration bins.
pub const DEFAULT_CALIBRATION_BINS: usize = 10;

/// One scored prediction against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub truth: Label,
    pub predicted: Label,
    /// Predicted probability that the item is Real.
    pub p_real: f64,
}

impl Prediction {
    pub fn new(truth: Label, predicted: Label, p_real: f64) -> Prediction {
        Prediction {
            truth,
            predicted,
            p_real,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("metric requires at least one prediction")]
    EmptyInput,
    /// ROC analysis needs both classes present in the ground truth.
    #[error("ground truth contains a single class")]
    SingleClass,
    #[error("invalid metric configuration: {reason}")]
    ConfigError { reason: &'static str },
}

/// Confusion counts `(tp, fp, tn, fn)` with respect to `positive`.
pub fn confusion_counts(preds: &[Prediction], positive: Label) -> (usize, usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for p in preds {
        match (p.truth == positive, p.predicted == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    (tp, fp, tn, fn_)
}

/// Fraction of predictions whose hard label matches the truth.
pub fn accuracy(preds: &[Prediction]) -> Result<f64, MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let correct = preds.iter().filter(|p| p.predicted == p.truth).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// F1 for one positive class. `degenerate` marks the case with no true
/// positives, false positives, or false negatives at all (the value is
/// reported as 0 there).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct F1Score {
    pub value: f64,
    pub degenerate: bool,
}

/// Harmonic mean of precision and recall: `2 TP / (2 TP + FP + FN)`.
pub fn f1_score(preds: &[Prediction], positive: Label) -> Result<F1Score, MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let (tp, fp, _, fn_) = confusion_counts(preds, positive);
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(F1Score {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(F1Score {
        value: 2.0 * tp as f64 / denom as f64,
        degenerate: false,
    })
}

/// One operating point of the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve points (threshold descending, from (0,0) to (1,1)) and the
/// trapezoidal area under them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps a threshold over the positive-class score (descending, ties
/// grouped) and accumulates the trapezoidal area.
///
/// The score for `positive == Real` is `p_real`; for `positive == Fake`
/// it is `1 - p_real`.
pub fn roc_curve(preds: &[Prediction], positive: Label) -> Result<RocCurve, MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let pos_total = preds.iter().filter(|p| p.truth == positive).count();
    let neg_total = preds.len() - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut scored: Vec<(f64, bool)> = preds
        .iter()
        .map(|p| {
            let s = if positive == Label::Real {
                p.p_real
            } else {
                1.0 - p.p_real
            };
            (s, p.truth == positive)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut tp_prev, mut fp_prev) = (0usize, 0usize);
    let mut area = 0.0;
    let mut points = Vec::new();
    let mut prev_score = f64::INFINITY;
    for &(score, is_pos) in &scored {
        if score != prev_score {
            area += trapezoid(fp_prev, fp, tp_prev, tp);
            points.push(RocPoint {
                fpr: fp as f64 / neg_total as f64,
                tpr: tp as f64 / pos_total as f64,
            });
            prev_score = score;
            fp_prev = fp;
            tp_prev = tp;
        }
        if is_pos {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    area += trapezoid(fp_prev, neg_total, tp_prev, pos_total);
    points.push(RocPoint { fpr: 1.0, tpr: 1.0 });
    Ok(RocCurve {
        points,
        auc: area / (pos_total as f64 * neg_total as f64),
    })
}

fn trapezoid(x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
    (x1 - x0) as f64 * (y0 + y1) as f64 / 2.0
}

/// One calibration bin over the Real-probability axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationBin {
    pub low: f64,
    pub high: f64,
    /// Mean predicted probability of Real inside the bin.
    pub mean_score: f64,
    /// Observed fraction of Real items inside the bin.
    pub observed: f64,
    pub count: usize,
}

/// Equal-width calibration bins over `p_real`; empty bins are omitted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
}

pub fn calibration_curve(
    preds: &[Prediction],
    n_bins: usize,
) -> Result<CalibrationCurve, MetricsError> {
    if n_bins < 1 {
        return Err(MetricsError::ConfigError {
            reason: "calibration requires at least one bin",
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut counts = alloc::vec![0usize; n_bins];
    let mut score_sums = alloc::vec![0.0f64; n_bins];
    let mut real_counts = alloc::vec![0usize; n_bins];
    for p in preds {
        let raw = (p.p_real * n_bins as f64) as usize;
        let bin = raw.min(n_bins - 1);
        counts[bin] += 1;
        score_sums[bin] += p.p_real;
        if p.truth == Label::Real {
            real_counts[bin] += 1;
        }
    }
    let width = 1.0 / n_bins as f64;
    let bins = (0..n_bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| CalibrationBin {
            low: b as f64 * width,
            high: if b + 1 == n_bins {
                1.0
            } else {
                (b + 1) as f64 * width
            },
            mean_score: score_sums[b] / counts[b] as f64,
            observed: real_counts[b] as f64 / counts[b] as f64,
            count: counts[b],
        })
        .collect();
    Ok(CalibrationCurve { bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pred(truth: Label, predicted: Label, p_real: f64) -> Prediction {
        Prediction::new(truth, predicted, p_real)
    }

    #[test]
    fn accuracy_hand_values() {
        use Label::*;
        let all_right = vec![pred(Real, Real, 0.9), pred(Fake, Fake, 0.1)];
        assert_eq!(accuracy(&all_right).unwrap(), 1.0);
        let all_wrong = vec![pred(Real, Fake, 0.1), pred(Fake, Real, 0.9)];
        assert_eq!(accuracy(&all_wrong).unwrap(), 0.0);
        let three_quarters = vec![
            pred(Real, Real, 0.9),
            pred(Real, Real, 0.8),
            pred(Fake, Fake, 0.2),
            pred(Fake, Real, 0.7),
        ];
        assert_eq!(accuracy(&three_quarters).unwrap(), 0.75);
        assert_eq!(accuracy(&[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn f1_hand_case_two_thirds() {
        use Label::*;
        // Positive class Fake: TP=2, FN=1, FP=1 -> F1 = 4/6 = 2/3.
        let preds = vec![
            pred(Fake, Fake, 0.1),
            pred(Fake, Fake, 0.2),
            pred(Fake, Real, 0.8),
            pred(Real, Fake, 0.3),
            pred(Real, Real, 0.9),
        ];
        let f1 = f1_score(&preds, Fake).unwrap();
        assert!((f1.value - 2.0 / 3.0).abs() <= 1e-12);
        assert!(!f1.degenerate);
    }

    #[test]
    fn f1_perfect_and_degenerate() {
        use Label::*;
        let perfect = vec![pred(Fake, Fake, 0.0), pred(Real, Real, 1.0)];
        assert_eq!(f1_score(&perfect, Fake).unwrap().value, 1.0);
        // No Fake truths, no Fake predictions: degenerate.
        let no_pos = vec![pred(Real, Real, 0.9), pred(Real, Real, 0.8)];
        let f1 = f1_score(&no_pos, Fake).unwrap();
        assert_eq!(f1.value, 0.0);
        assert!(f1.degenerate);
        // Positives exist but none predicted: plain zero, not degenerate.
        let missed = vec![pred(Fake, Real, 0.9), pred(Real, Real, 0.8)];
        let f1 = f1_score(&missed, Fake).unwrap();
        assert_eq!(f1.value, 0.0);
        assert!(!f1.degenerate);
    }

    #[test]
    fn confusion_counts_partition_the_input() {
        use Label::*;
        let preds = vec![
            pred(Fake, Fake, 0.1),
            pred(Fake, Real, 0.9),
            pred(Real, Real, 0.8),
            pred(Real, Fake, 0.4),
        ];
        let (tp, fp, tn, fn_) = confusion_counts(&preds, Fake);
        assert_eq!((tp, fp, tn, fn_), (1, 1, 1, 1));
        assert_eq!(tp + fp + tn + fn_, preds.len());
    }

    #[test]
    fn roc_perfect_separation_has_auc_one() {
        use Label::*;
        let preds = vec![
            pred(Real, Real, 0.9),
            pred(Real, Real, 0.8),
            pred(Fake, Fake, 0.2),
            pred(Fake, Fake, 0.1),
        ];
        let roc = roc_curve(&preds, Real).unwrap();
        assert_eq!(roc.auc, 1.0);
    }

    #[test]
    fn roc_all_tied_scores_is_chance() {
        use Label::*;
        let preds = vec![
            pred(Real, Real, 0.5),
            pred(Fake, Real, 0.5),
            pred(Real, Real, 0.5),
            pred(Fake, Real, 0.5),
        ];
        let roc = roc_curve(&preds, Real).unwrap();
        assert_eq!(roc.auc, 0.5);
        // Tie grouping collapses the sweep to the two endpoints.
        assert_eq!(
            roc.points,
            vec![
                RocPoint { fpr: 0.0, tpr: 0.0 },
                RocPoint { fpr: 1.0, tpr: 1.0 }
            ]
        );
    }

    #[test]
    fn roc_hand_case_three_quarters() {
        use Label::*;
        let preds = vec![
            pred(Real, Real, 0.9),
            pred(Fake, Real, 0.8),
            pred(Real, Real, 0.7),
            pred(Fake, Fake, 0.1),
        ];
        let roc = roc_curve(&preds, Real).unwrap();
        assert!((roc.auc - 0.75).abs() <= 1e-12);
        assert_eq!(
            roc.points.first().unwrap(),
            &RocPoint { fpr: 0.0, tpr: 0.0 }
        );
        assert_eq!(roc.points.last().unwrap(), &RocPoint { fpr: 1.0, tpr: 1.0 });
        for w in roc.points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn roc_single_class_is_an_error() {
        use Label::*;
        let preds = vec![pred(Real, Real, 0.9), pred(Real, Fake, 0.2)];
        assert_eq!(
            roc_curve(&preds, Real).unwrap_err(),
            MetricsError::SingleClass
        );
        assert_eq!(roc_curve(&[], Real).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn roc_fake_positive_mirrors_real_positive() {
        use Label::*;
        let preds = vec![
            pred(Real, Real, 0.9),
            pred(Fake, Real, 0.6),
            pred(Real, Real, 0.7),
            pred(Fake, Fake, 0.2),
        ];
        let real = roc_curve(&preds, Real).unwrap();
        let fake = roc_curve(&preds, Fake).unwrap();
        // Scores are complements, so ranking quality is identical.
        assert!((real.auc - fake.auc).abs() <= 1e-12);
    }

    #[test]
    fn calibration_single_bin_hand_case() {
        use Label::*;
        let preds: Vec<Prediction> = (0..10).map(|_| pred(Real, Real, 0.7)).collect();
        let curve = calibration_curve(&preds, DEFAULT_CALIBRATION_BINS).unwrap();
        assert_eq!(curve.bins.len(), 1);
        let bin = &curve.bins[0];
        assert!((bin.mean_score - 0.7).abs() <= 1e-12);
        assert_eq!(bin.observed, 1.0);
        assert_eq!(bin.count, 10);
        assert!((bin.low, bin.high) == (0.7, 0.8) || (bin.low - 0.7).abs() < 1e-12);
    }

    #[test]
    fn calibration_buckets_scores_and_omits_empty_bins() {
        use Label::*;
        let preds = vec![
            pred(Real, Real, 0.95),
            pred(Real, Real, 0.9),
            pred(Fake, Fake, 0.05),
            pred(Fake, Fake, 0.1),
            pred(Fake, Real, 0.92),
        ];
        let curve = calibration_curve(&preds, 10).unwrap();
        // Scores land in bins 0, 1, and 9 only.
        assert_eq!(curve.bins.len(), 3);
        let total: usize = curve.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, preds.len());
        let top = curve.bins.last().unwrap();
        assert_eq!(top.count, 3);
        assert!((top.observed - 2.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn calibration_extremes_land_in_outer_bins() {
        use Label::*;
        let preds = vec![pred(Real, Real, 1.0), pred(Fake, Fake, 0.0)];
        let curve = calibration_curve(&preds, 10).unwrap();
        assert_eq!(curve.bins.len(), 2);
        assert_eq!(curve.bins[0].low, 0.0);
        assert_eq!(curve.bins[1].high, 1.0);
    }

    #[test]
    fn calibration_rejects_zero_bins_and_empty_input() {
        use Label::*;
        let preds = vec![pred(Real, Real, 0.7)];
        assert!(matches!(
            calibration_curve(&preds, 0).unwrap_err(),
            MetricsError::ConfigError { .. }
        ));
        assert_eq!(
            calibration_curve(&[], 10).unwrap_err(),
            MetricsError::EmptyInput
        );
        // A single prediction is fine.
        let one = calibration_curve(&preds, 10).unwrap();
        assert_eq!(one.bins.len(), 1);
        assert_eq!(one.bins[0].count, 1);
    }
}
