use serde::{Deserialize, Serialize};

use super::special::{student_t_quantile, student_t_two_sided};
use super::{mean, Result, StatsError};
use crate::Scalar;

/// Relative pivot size below which a column counts as linearly dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient<T> {
    pub name: String,
    pub beta: T,
    pub se: T,
    pub t: T,
    pub p: T,
    pub ci_lo: T,
    pub ci_hi: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult<T> {
    pub coefficients: Vec<Coefficient<T>>,
    pub residuals: Vec<T>,
    pub sigma2: T,
    pub r2: T,
    pub n: usize,
    pub df: usize,
}

impl<T: Scalar> OlsResult<T> {
    pub fn get(&self, name: &str) -> Option<&Coefficient<T>> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn betas(&self) -> Vec<T> {
        self.coefficients.iter().map(|c| c.beta).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit<T> {
    /// Ascending powers: `c₀ + c₁x + c₂x² + …`
    pub coefficients: Vec<T>,
    pub r2: T,
}

impl<T: Scalar> PolyFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.coefficients.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
    }

    /// Stationary point of a quadratic fit.
    pub fn vertex(&self) -> Option<T> {
        match self.coefficients.as_slice() {
            [_, b, a] if *a != T::zero() => Some(-*b / (T::c(2.0) * *a)),
            _ => None,
        }
    }
}

/// Householder QR of an n×k column-major matrix, applied in place to `y` too.
/// Returns the k×k upper-triangular R (row-major) and Qᵀy.
fn householder<T: Scalar>(mut cols: Vec<Vec<T>>, mut y: Vec<T>, names: &[String]) -> Result<(Vec<T>, Vec<T>)> {
    let k = cols.len();
    let norms: Vec<T> = cols.iter().map(|c| c.iter().map(|v| *v * *v).sum::<T>().sqrt()).collect();
    let mut r = vec![T::zero(); k * k];
    let tol = T::c(RANK_TOL).max(T::epsilon() * T::c(1000.0));
    for j in 0..k {
        let alpha_norm = cols[j][j..].iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norms[j] == T::zero() || alpha_norm <= tol * norms[j] {
            return Err(StatsError::Singular { column: names[j].clone() });
        }
        let alpha = if cols[j][j] > T::zero() { -alpha_norm } else { alpha_norm };
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 > T::zero() {
            let reflect = |c: &mut [T]| {
                let dot: T = v.iter().zip(c.iter()).map(|(a, b)| *a * *b).sum();
                let f = T::c(2.0) * dot / vnorm2;
                for (ci, vi) in c.iter_mut().zip(&v) {
                    *ci -= f * *vi;
                }
            };
            for c in cols.iter_mut().skip(j) {
                reflect(&mut c[j..]);
            }
            reflect(&mut y[j..]);
        }
    }
    for j in 0..k {
        for i in 0..=j {
            r[i * k + j] = cols[j][i];
        }
    }
    Ok((r, y))
}

/// Least squares on named predictor columns, optionally prepending an
/// intercept named `const`.
pub fn ols_fit<T: Scalar>(columns: &[(String, Vec<T>)], y: &[T], add_intercept: bool) -> Result<OlsResult<T>> {
    let n = y.len();
    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<T>> = Vec::new();
    if add_intercept {
        names.push("const".into());
        cols.push(vec![T::one(); n]);
    }
    for (name, c) in columns {
        if c.len() != n {
            return Err(StatsError::Input(format!("column {name} has {} rows, response has {n}", c.len())));
        }
        names.push(name.clone());
        cols.push(c.clone());
    }
    let k = cols.len();
    if k == 0 {
        return Err(StatsError::Input("empty design".into()));
    }
    if n <= k {
        return Err(StatsError::Input(format!("need more than {k} observations, got {n}")));
    }
    if y.iter().chain(cols.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(StatsError::Input("non-finite value in design or response".into()));
    }
    let (r, qty) = householder(cols.clone(), y.to_vec(), &names)?;

    let mut beta = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= r[i * k + j] * beta[j];
        }
        beta[i] = s / r[i * k + i];
    }
    // R⁻¹, upper triangular; diag((XᵀX)⁻¹) is the row-wise squared norm.
    let mut rinv = vec![T::zero(); k * k];
    for j in 0..k {
        rinv[j * k + j] = T::one() / r[j * k + j];
        for i in (0..j).rev() {
            let mut s = T::zero();
            for m in i + 1..=j {
                s += r[i * k + m] * rinv[m * k + j];
            }
            rinv[i * k + j] = -s / r[i * k + i];
        }
    }

    let residuals: Vec<T> = (0..n)
        .map(|i| y[i] - (0..k).map(|j| cols[j][i] * beta[j]).sum::<T>())
        .collect();
    let rss: T = residuals.iter().map(|e| *e * *e).sum();
    let df = n - k;
    let sigma2 = rss / T::from_usize_lossy(df);
    let tss: T = if add_intercept {
        let m = mean(y);
        y.iter().map(|v| (*v - m) * (*v - m)).sum()
    } else {
        y.iter().map(|v| *v * *v).sum()
    };
    let r2 = if tss > T::zero() { T::one() - rss / tss } else { T::one() };
    let t_crit = T::c(student_t_quantile(0.975, df as f64));

    let coefficients = (0..k)
        .map(|i| {
            let xtx_ii: T = (i..k).map(|j| rinv[i * k + j] * rinv[i * k + j]).sum();
            let se = (sigma2 * xtx_ii).sqrt();
            let b = beta[i];
            let (t, p) = if se > T::zero() {
                let t = b / se;
                (t, T::c(student_t_two_sided(t.f64(), df as f64)))
            } else if b == T::zero() {
                (T::zero(), T::one())
            } else {
                (b.signum() * T::infinity(), T::zero())
            };
            Coefficient { name: names[i].clone(), beta: b, se, t, p, ci_lo: b - t_crit * se, ci_hi: b + t_crit * se }
        })
        .collect();
    Ok(OlsResult { coefficients, residuals, sigma2, r2, n, df })
}

/// Polynomial least squares on a Vandermonde design through the same QR path.
pub fn poly_fit_r2<T: Scalar>(x: &[T], y: &[T], degree: usize) -> Result<PolyFit<T>> {
    if x.len() != y.len() {
        return Err(StatsError::Input(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    if degree == 0 {
        return Err(StatsError::Input("degree must be at least 1".into()));
    }
    if x.len() <= degree + 1 {
        return Err(StatsError::Input(format!("degree {degree} needs more than {} points", degree + 1)));
    }
    let columns: Vec<(String, Vec<T>)> =
        (1..=degree).map(|d| (format!("x^{d}"), x.iter().map(|v| v.powi(d as i32)).collect())).collect();
    let fit = ols_fit(&columns, y, true)?;
    Ok(PolyFit { coefficients: fit.betas(), r2: fit.r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str, v: Vec<f64>) -> (String, Vec<f64>) {
        (name.to_string(), v)
    }

    #[test]
    fn exact_line_through_origin() {
        let x: Vec<f64> = (1..=6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&[col("x", x)], &y, false).unwrap();
        let c = &fit.coefficients[0];
        assert!((c.beta - 2.0).abs() < 1e-12);
        assert!(c.se.abs() < 1e-7);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [1.0, 2.0, 6.0, 3.0];
        let fit = ols_fit::<f64>(&[], &y, true).unwrap();
        assert!((fit.coefficients[0].beta - 3.0).abs() < 1e-14);
        assert_eq!(fit.coefficients[0].name, "const");
    }

    #[test]
    fn textbook_regression() {
        // x = 1..5, y = (1, 3, 2, 5, 4): slope 0.8, intercept 0.6, RSS 3.6
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let fit = ols_fit(&[col("x", x)], &y, true).unwrap();
        let b0 = &fit.coefficients[0];
        let b1 = &fit.coefficients[1];
        assert!((b0.beta - 0.6).abs() < 1e-12);
        assert!((b1.beta - 0.8).abs() < 1e-12);
        assert!((fit.sigma2 - 1.2).abs() < 1e-12);
        assert!((b1.se - (1.2f64 / 10.0).sqrt()).abs() < 1e-12);
        assert!((fit.r2 - 0.64).abs() < 1e-12);
        // scipy.stats.linregress p-value for this data
        assert!((b1.p - 0.10408803866182788).abs() < 1e-8);
    }

    #[test]
    fn dependent_column_is_named() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        match ols_fit(&[col("a", a), col("b", b)], &[1.0, 0.0, 2.0, 5.0], true) {
            Err(StatsError::Singular { column }) => assert_eq!(column, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parabola_fit() {
        let x: Vec<f64> = (0..11).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| -(v - 5.0).powi(2)).collect();
        let fit = poly_fit_r2(&x, &y, 2).unwrap();
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[2] + 1.0).abs() < 1e-10);
        assert!((fit.vertex().unwrap() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn constant_x_is_singular() {
        assert!(matches!(poly_fit_r2(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 2), Err(StatsError::Singular { .. })));
    }
}
