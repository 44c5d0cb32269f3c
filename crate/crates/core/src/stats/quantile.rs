use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::Scalar;

/// Linear interpolation between order statistics: position `(n − 1)·p` of
/// the sorted sample.
pub fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::c(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub(crate) fn sorted_copy<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary<T> {
    pub n: usize,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub iqr: T,
    pub min: T,
    pub max: T,
}

pub fn distribution_summary<T: Scalar>(xs: &[T]) -> Result<DistributionSummary<T>> {
    if xs.is_empty() {
        return Err(StatsError::Input("distribution summary needs at least one value".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Input("non-finite value".into()));
    }
    let s = sorted_copy(xs);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    Ok(DistributionSummary { n: s.len(), q1, median, q3, iqr: q3 - q1, min: s[0], max: s[s.len() - 1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_values() {
        let s = distribution_summary(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.iqr), (2.0, 3.0, 4.0, 2.0));
    }

    #[test]
    fn single_and_constant() {
        let s = distribution_summary(&[7.5f64]).unwrap();
        assert_eq!((s.median, s.iqr), (7.5, 0.0));
        let c = distribution_summary(&[2.0f32; 9]).unwrap();
        assert_eq!(c.iqr, 0.0);
        assert!(distribution_summary::<f64>(&[]).is_err());
    }
}
