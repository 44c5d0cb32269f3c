use serde::{Deserialize, Serialize};

use super::quantile::{quantile, sorted_copy};
use super::{Result, StatsError};
use crate::Scalar;

/// One-vs-rest counts per class.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
}

impl ConfusionCounts {
    pub fn single(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp: vec![tp], fp: vec![fp], fn_: vec![fn_] }
    }

    pub fn from_labels(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(StatsError::Input(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
        }
        let mut c = Self { tp: vec![0; classes], fp: vec![0; classes], fn_: vec![0; classes] };
        for (t, p) in truth.iter().zip(predicted) {
            if *t >= classes || *p >= classes {
                return Err(StatsError::Input(format!("label outside 0..{classes}")));
            }
            if t == p {
                c.tp[*t] += 1;
            } else {
                c.fp[*p] += 1;
                c.fn_[*t] += 1;
            }
        }
        Ok(c)
    }

    pub fn classes(&self) -> usize {
        self.tp.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: ClassMetrics,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class plus their unweighted means. A zero
/// denominator yields 0 for that metric.
pub fn precision_recall_f1(c: &ConfusionCounts) -> F1Report {
    let per_class: Vec<ClassMetrics> = (0..c.classes())
        .map(|k| {
            let precision = ratio(c.tp[k], c.tp[k] + c.fp[k]);
            let recall = ratio(c.tp[k], c.tp[k] + c.fn_[k]);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassMetrics { precision, recall, f1 }
        })
        .collect();
    let n = per_class.len().max(1) as f64;
    let macro_avg = ClassMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    F1Report { per_class, macro_avg }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tertiles<T> {
    pub labels: Vec<usize>,
    pub cuts: (T, T),
}

/// Low/medium/high labels at the 1/3 and 2/3 sample quantiles:
/// `x ≤ q₁ → 0`, `q₁ < x ≤ q₂ → 1`, otherwise 2.
pub fn tertile_recode<T: Scalar>(scores: &[T]) -> Result<Tertiles<T>> {
    if scores.len() < 3 {
        return Err(StatsError::Input(format!("tertiles need at least 3 values, got {}", scores.len())));
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Input("non-finite score".into()));
    }
    let s = sorted_copy(scores);
    let q1 = quantile(&s, 1.0 / 3.0);
    let q2 = quantile(&s, 2.0 / 3.0);
    Ok(Tertiles { labels: scores.iter().map(|x| tertile_label(*x, (q1, q2))).collect(), cuts: (q1, q2) })
}

/// Label of `x` under fixed cut points.
pub fn tertile_label<T: Scalar>(x: T, cuts: (T, T)) -> usize {
    if x <= cuts.0 {
        0
    } else if x <= cuts.1 {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        let m = precision_recall_f1(&ConfusionCounts::single(5, 0, 0)).macro_avg;
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = precision_recall_f1(&ConfusionCounts::single(1, 1, 1)).macro_avg;
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        let m = precision_recall_f1(&ConfusionCounts::single(42, 8, 8)).macro_avg;
        assert!((m.precision - 0.84).abs() < 1e-15);
        assert!((m.recall - 0.84).abs() < 1e-15);
        assert!((m.f1 - 0.84).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators() {
        let m = precision_recall_f1(&ConfusionCounts::single(0, 0, 0)).macro_avg;
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn confusion_from_labels() {
        let c = ConfusionCounts::from_labels(&[0, 1, 2, 2], &[0, 2, 2, 1], 3).unwrap();
        assert_eq!(c.tp, vec![1, 0, 1]);
        assert_eq!(c.fp, vec![0, 1, 1]);
        assert_eq!(c.fn_, vec![0, 1, 1]);
    }

    #[test]
    fn tertile_examples() {
        let xs: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(tertile_recode(&xs).unwrap().labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let t = tertile_recode(&[4.2f64; 7]).unwrap();
        assert!(t.labels.iter().all(|l| *l == 0));
        assert_eq!(t.cuts, (4.2, 4.2));
        assert!(tertile_recode(&[1.0f64, 2.0]).is_err());
    }
}
