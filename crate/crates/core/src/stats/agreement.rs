use serde::{Deserialize, Serialize};

use super::{mean, Result, StatsError};
use crate::Scalar;

/// Normal-approximation multiplier for the limits of agreement.
pub const LOA_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanResult<T> {
    pub n: usize,
    pub bias: T,
    pub sd: T,
    pub lower: T,
    pub upper: T,
    /// Indices whose difference falls outside `[lower, upper]`.
    pub outliers: Vec<usize>,
}

/// Differences `model − human`, bias ± 1.96 sample sd.
pub fn bland_altman<T: Scalar>(model: &[T], human: &[T]) -> Result<BlandAltmanResult<T>> {
    if model.len() != human.len() {
        return Err(StatsError::Input(format!("{} model scores vs {} human scores", model.len(), human.len())));
    }
    if model.len() < 2 {
        return Err(StatsError::Input("Bland-Altman needs at least 2 pairs".into()));
    }
    if model.iter().chain(human).any(|x| !x.is_finite()) {
        return Err(StatsError::Input("non-finite score".into()));
    }
    let d: Vec<T> = model.iter().zip(human).map(|(m, h)| *m - *h).collect();
    let bias = mean(&d);
    let var = d.iter().map(|x| (*x - bias) * (*x - bias)).sum::<T>() / T::from_usize_lossy(d.len() - 1);
    let sd = var.sqrt();
    let half = T::c(LOA_Z) * sd;
    let (lower, upper) = (bias - half, bias + half);
    let outliers = d.iter().enumerate().filter(|(_, x)| **x < lower || **x > upper).map(|(i, _)| i).collect();
    Ok(BlandAltmanResult { n: d.len(), bias, sd, lower, upper, outliers })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AgreementMode<T> {
    Exact,
    /// `|a − b| ≤ tol`
    Fuzzy(T),
}

pub fn agreement_rate<T: Scalar>(a: &[T], b: &[T], mode: AgreementMode<T>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(StatsError::Input(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(StatsError::Input("agreement of empty series".into()));
    }
    let hits = a
        .iter()
        .zip(b)
        .filter(|(x, y)| match mode {
            AgreementMode::Exact => x == y,
            AgreementMode::Fuzzy(tol) => (**x - **y).abs() <= tol,
        })
        .count();
    Ok(hits as f64 / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series() {
        let x = [3.0, 4.5, 1.0, 2.0];
        let r = bland_altman(&x, &x).unwrap();
        assert_eq!((r.bias, r.lower, r.upper), (0.0, 0.0, 0.0));
        assert!(r.outliers.is_empty());
    }

    #[test]
    fn constant_offset() {
        let h = [1.0, 2.0, 3.0, 4.0];
        let m: Vec<f64> = h.iter().map(|x| x + 1.0).collect();
        let r = bland_altman(&m, &h).unwrap();
        assert_eq!((r.bias, r.sd, r.lower, r.upper), (1.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn unit_spread() {
        let r = bland_altman::<f64>(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((r.bias, r.sd), (0.0, 1.0));
        assert_eq!((r.lower, r.upper), (-1.96, 1.96));
        assert!(r.outliers.is_empty());
        assert!((r.upper - r.lower - 2.0 * 1.96 * r.sd).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(bland_altman(&[1.0, 2.0], &[1.0]).is_err());
        assert!(agreement_rate(&[1.0], &[1.0, 2.0], AgreementMode::Exact).is_err());
    }

    #[test]
    fn agreement_examples() {
        let a = [0.0, 1.0, 2.0];
        assert_eq!(agreement_rate(&a, &a, AgreementMode::Exact).unwrap(), 1.0);
        assert_eq!(agreement_rate(&a, &a, AgreementMode::Fuzzy(1.0)).unwrap(), 1.0);
        let b = [1.0, 1.0, 2.0];
        assert!((agreement_rate(&a, &b, AgreementMode::Exact).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(agreement_rate(&a, &b, AgreementMode::Fuzzy(1.0)).unwrap(), 1.0);
        let z = [0.0; 4];
        let t = [2.0; 4];
        assert_eq!(agreement_rate(&z, &t, AgreementMode::Exact).unwrap(), 0.0);
        assert_eq!(agreement_rate(&z, &t, AgreementMode::Fuzzy(1.0)).unwrap(), 0.0);
    }
}
