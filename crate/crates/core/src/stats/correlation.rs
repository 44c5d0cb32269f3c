use serde::{Deserialize, Serialize};

use super::{mean, Result, StatsError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrMethod {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix<T> {
    pub method: CorrMethod,
    pub names: Vec<String>,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> CorrMatrix<T> {
    pub fn get(&self, a: &str, b: &str) -> Option<T> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

fn check_pair<T: Scalar>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(StatsError::Input(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(StatsError::Input(format!("correlation needs at least 3 values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::Input("non-finite value".into()));
    }
    Ok(())
}

fn centered<T: Scalar>(x: &[T], name: &str) -> Result<(Vec<T>, T)> {
    let m = mean(x);
    let c: Vec<T> = x.iter().map(|v| *v - m).collect();
    let ss: T = c.iter().map(|v| *v * *v).sum();
    if ss <= T::zero() {
        return Err(StatsError::UndefinedCorrelation { column: name.to_string() });
    }
    Ok((c, ss.sqrt()))
}

fn pearson_named<T: Scalar>(x: &[T], y: &[T], nx: &str, ny: &str) -> Result<T> {
    check_pair(x, y)?;
    let (cx, sx) = centered(x, nx)?;
    let (cy, sy) = centered(y, ny)?;
    let r = cx.iter().zip(&cy).map(|(a, b)| *a * *b).sum::<T>() / (sx * sy);
    Ok(r.max(-T::one()).min(T::one()))
}

pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    pearson_named(x, y, "x", "y")
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn mid_ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|a, b| x[*a].partial_cmp(&x[*b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = T::c((i + j) as f64 / 2.0 + 1.0);
        for k in &order[i..=j] {
            ranks[*k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Pairwise correlation of named columns. The diagonal is exactly 1 and the
/// matrix is filled symmetrically from its upper triangle.
pub fn corr_matrix<T: Scalar>(columns: &[(String, Vec<T>)], method: CorrMethod) -> Result<CorrMatrix<T>> {
    let k = columns.len();
    if k == 0 {
        return Err(StatsError::Input("no columns".into()));
    }
    let n = columns[0].1.len();
    if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != n) {
        return Err(StatsError::Input(format!("column {name} has a different length")));
    }
    let prepared: Vec<Vec<T>> = columns
        .iter()
        .map(|(_, c)| match method {
            CorrMethod::Pearson => c.clone(),
            CorrMethod::Spearman => mid_ranks(c),
        })
        .collect();
    for ((name, _), c) in columns.iter().zip(&prepared) {
        check_pair(c, c)?;
        centered(c, name)?;
    }
    let mut values = vec![vec![T::one(); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = pearson_named(&prepared[i], &prepared[j], &columns[i].0, &columns[j].0)?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrMatrix { method, names: columns.iter().map(|(n, _)| n.clone()).collect(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_negation() {
        let x = [1.0f64, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_get_mean_rank() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn zero_variance_names_column() {
        let cols = vec![("a".to_string(), vec![1.0, 2.0, 3.0]), ("flat".to_string(), vec![2.0; 3])];
        match corr_matrix(&cols, CorrMethod::Pearson) {
            Err(StatsError::UndefinedCorrelation { column }) => assert_eq!(column, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spearman_monotone_invariance() {
        let x = [0.3, 1.7, -2.0, 4.4, 0.9, 2.2];
        let y = [1.0, 0.5, -1.0, 3.0, 2.5, 0.1];
        let cubed: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert!((spearman(&x, &y).unwrap() - spearman(&cubed, &y).unwrap()).abs() < 1e-15);
    }
}
