use serde::{Deserialize, Serialize};

use super::special::{normal_quantile, normal_sf};
use super::{Result, StatsError};
use crate::Scalar;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

const MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub n: usize,
    pub w: f64,
    pub p: f64,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Lower-half weights `a₁..a_{n/2}` (positive), Royston's approximation.
fn weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let m: Vec<f64> = (1..=half).map(|i| -normal_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = m[0] / ssumm2 + poly(&C1, rsn);
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        (2, ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt())
    } else {
        (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
    };
    for i in first..half {
        a[i] = m[i] / fac;
    }
    a
}

/// Shapiro–Wilk W and its p value (Royston, AS R94).
pub fn shapiro_wilk<T: Scalar>(xs: &[T]) -> Result<ShapiroWilk> {
    let n = xs.len();
    if !(3..=MAX_N).contains(&n) {
        return Err(StatsError::Input(format!("Shapiro-Wilk needs 3..={MAX_N} values, got {n}")));
    }
    let mut x: Vec<f64> = xs.iter().map(|v| v.f64()).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Input("non-finite value".into()));
    }
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(StatsError::Degenerate("all values identical".into()));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| (v - mean) / range).collect();
    let ss: f64 = centered.iter().map(|v| v * v).sum();
    let a = weights(n);
    let num: f64 = a.iter().enumerate().map(|(i, ai)| ai * (centered[n - 1 - i] - centered[i])).sum();
    let w = (num * num / ss).min(1.0);

    if n == 3 {
        let p = (6.0 / std::f64::consts::PI) * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        return Ok(ShapiroWilk { n, w, p: p.clamp(0.0, 1.0) });
    }
    let an = n as f64;
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return Ok(ShapiroWilk { n, w, p: 1e-99 });
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let ln_n = an.ln();
        (w1, poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    Ok(ShapiroWilk { n, w, p: normal_sf((y - m) / s) })
}
