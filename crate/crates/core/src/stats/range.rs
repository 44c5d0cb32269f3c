use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::Scalar;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRange {
    pub rate: f64,
    pub offending: Vec<usize>,
}

/// Share of predictions outside their interval. `ranges` holds either one
/// interval per prediction or a single global interval.
pub fn out_of_range_rate<T: Scalar>(predictions: &[T], ranges: &[Range<T>]) -> Result<OutOfRange> {
    if let Some(r) = ranges.iter().find(|r| !(r.lo <= r.hi)) {
        return Err(StatsError::Input(format!("malformed interval [{}, {}]", r.lo, r.hi)));
    }
    if ranges.len() != 1 && ranges.len() != predictions.len() {
        return Err(StatsError::Input(format!(
            "{} intervals for {} predictions",
            ranges.len(),
            predictions.len()
        )));
    }
    if predictions.is_empty() {
        return Ok(OutOfRange { rate: 0.0, offending: vec![] });
    }
    let offending: Vec<usize> = predictions
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            let r = if ranges.len() == 1 { ranges[0] } else { ranges[*i] };
            !(**p >= r.lo && **p <= r.hi)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(OutOfRange { rate: offending.len() as f64 / predictions.len() as f64, offending })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = [Range { lo: 1.0, hi: 5.0 }];
        assert_eq!(out_of_range_rate(&[1.0, 3.0, 5.0], &r).unwrap().rate, 0.0);
        let preds: Vec<f64> = (0..143).map(|i| if i < 26 { 9.0 } else { 3.0 }).collect();
        let o = out_of_range_rate(&preds, &r).unwrap();
        assert!((o.rate - 26.0 / 143.0).abs() < 1e-15);
        assert!((1.0 - o.rate - 117.0 / 143.0).abs() < 1e-15);
        assert_eq!(o.offending, (0..26).collect::<Vec<_>>());
        let e = out_of_range_rate::<f64>(&[], &r).unwrap();
        assert_eq!((e.rate, e.offending.len()), (0.0, 0));
        assert!(out_of_range_rate(&[1.0], &[Range { lo: 2.0, hi: 1.0 }]).is_err());
    }

    #[test]
    fn per_item_intervals() {
        let r = [Range { lo: 0.0, hi: 1.0 }, Range { lo: 2.0, hi: 3.0 }];
        let o = out_of_range_rate(&[0.5, 0.5], &r).unwrap();
        assert_eq!(o.offending, vec![1]);
    }
}
