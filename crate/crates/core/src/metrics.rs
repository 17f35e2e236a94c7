//! Confusion matrices, binary diagnostic metrics and AUC-ROC.
//!
//! `Malignant` is the positive class throughout. Metrics are stored as exact
//! fractions ([`Proportion`]) and only rounded when rendered, so identities
//! such as `specificity + fp_rate = 1` hold exactly rather than to within a
//! rounding error.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::datamodel::BinaryLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {predictions} predictions vs {truths} truths")]
    ShapeError { predictions: usize, truths: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("AUC needs at least one malignant and one benign truth")]
    DegenerateLabels,
    #[error("score at position {index} is not finite")]
    NonFiniteScore { index: usize },
}

/// Non-negative exact fraction, always in lowest terms with a non-zero
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Proportion {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Proportion {
    /// `None` when `den` is zero.
    pub fn new(num: u64, den: u64) -> Option<Proportion> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        Some(Proportion {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `round(self * 10^decimals)` with halves rounded away from zero, in
    /// exact integer arithmetic.
    pub fn scaled_round(self, decimals: u32) -> u128 {
        let scale = 10u128.pow(decimals);
        let num = u128::from(self.num) * scale;
        let den = u128::from(self.den);
        (2 * num + den) / (2 * den)
    }

    /// Fixed-point rendering with `decimals` places, halves away from zero.
    pub fn render(self, decimals: u32) -> String {
        render_scaled(self.scaled_round(decimals), decimals)
    }
}

pub(crate) fn render_scaled(scaled: u128, decimals: u32) -> String {
    if decimals == 0 {
        return scaled.to_string();
    }
    let scale = 10u128.pow(decimals);
    format!(
        "{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = decimals as usize
    )
}

impl Ord for Proportion {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = u128::from(self.num) * u128::from(other.den);
        let rhs = u128::from(other.num) * u128::from(self.den);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Proportion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(3))
    }
}

/// Renders an optional metric to three decimals, or `n/a` when absent.
pub fn render_metric(value: Option<Proportion>) -> String {
    value.map_or_else(|| "n/a".to_string(), |p| p.render(3))
}

/// Binary confusion matrix with `Malignant` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn record(&mut self, prediction: BinaryLabel, truth: BinaryLabel) {
        match (truth, prediction) {
            (BinaryLabel::Malignant, BinaryLabel::Malignant) => self.tp += 1,
            (BinaryLabel::Malignant, BinaryLabel::Benign) => self.fn_ += 1,
            (BinaryLabel::Benign, BinaryLabel::Malignant) => self.fp += 1,
            (BinaryLabel::Benign, BinaryLabel::Benign) => self.tn += 1,
        }
    }
}

/// The six diagnostic metrics. A metric is `None` when its denominator is
/// zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSet {
    pub accuracy: Option<Proportion>,
    pub sensitivity: Option<Proportion>,
    pub specificity: Option<Proportion>,
    pub ppv: Option<Proportion>,
    pub fp_rate: Option<Proportion>,
    pub f1: Option<Proportion>,
}

impl MetricSet {
    /// The metrics in table column order: accuracy, sensitivity,
    /// specificity, PPV, FP rate, F1.
    pub fn columns(&self) -> [Option<Proportion>; 6] {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.ppv,
            self.fp_rate,
            self.f1,
        ]
    }
}

pub fn confusion(predictions: &[BinaryLabel], truths: &[BinaryLabel]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::ShapeError {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        cm.record(p, t);
    }
    Ok(cm)
}

pub fn binary_metrics(cm: &ConfusionMatrix) -> Result<MetricSet, MetricsError> {
    let ConfusionMatrix { tp, fn_, fp, tn } = *cm;
    if cm.total() == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(MetricSet {
        accuracy: Proportion::new(tp + tn, cm.total()),
        sensitivity: Proportion::new(tp, tp + fn_),
        specificity: Proportion::new(tn, tn + fp),
        ppv: Proportion::new(tp, tp + fp),
        fp_rate: Proportion::new(fp, fp + tn),
        f1: Proportion::new(2 * tp, 2 * tp + fn_ + fp),
    })
}

/// Area under the ROC curve via the Mann–Whitney rank statistic, with tied
/// scores assigned their midrank. Equals the fraction of (malignant, benign)
/// pairs in which the malignant case scores higher, ties counting one half.
pub fn roc_auc(scores: &[f64], truths: &[BinaryLabel]) -> Result<f64, MetricsError> {
    if scores.len() != truths.len() {
        return Err(MetricsError::ShapeError {
            predictions: scores.len(),
            truths: truths.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore { index });
    }
    let n_pos = truths.iter().filter(|t| t.is_malignant()).count();
    let n_neg = truths.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Ranks are 1-based; doubled so midranks stay integral.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let doubled_midrank = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&i| truths[i].is_malignant()).count() as u128;
        doubled_rank_sum += doubled_midrank * positives;
        start = end;
    }

    let n_pos = n_pos as u128;
    let n_neg = n_neg as u128;
    // 2U = 2R - n_pos(n_pos + 1)
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}
