//! Central finite-difference gradient checking.

use crate::autodiff::{Graph, Var};
use crate::scalar::Scalar;
use crate::tensor::{Result, Tensor};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative error of one coordinate: `|analytic - numeric| / max(1, |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Compares the reverse-mode gradient of `f` at `x` with central differences
/// and returns the maximum relative error over all coordinates.
///
/// `f` builds a scalar loss from the leaf it is given; it is invoked once for
/// the analytic pass and twice per coordinate for the numeric one.
pub fn finite_diff_check<T, F>(f: F, x: &Tensor<T>, h: f64) -> Result<f64>
where
    T: Scalar,
    F: Fn(&mut Graph<T>, Var) -> Result<Var>,
{
    let analytic = {
        let mut g = Graph::new();
        let leaf = g.leaf(x.detach().with_grad())?;
        let loss = f(&mut g, leaf)?;
        g.backward(loss)?;
        g.grad(leaf).map(<[T]>::to_vec).unwrap_or_else(|| vec![T::zero(); x.numel()])
    };
    let eval = |t: Tensor<T>| -> Result<f64> {
        let mut g = Graph::new();
        let leaf = g.leaf(t)?;
        let loss = f(&mut g, leaf)?;
        Ok(g.value(loss).data()[0].f64())
    };
    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let mut plus = x.detach();
        plus.data_mut()[i] += T::c(h);
        let mut minus = x.detach();
        minus.data_mut()[i] -= T::c(h);
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
        worst = worst.max(relative_error(analytic[i].f64(), numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn linear_function_is_exact() {
        let mut rng = seeded(11);
        let x = Tensor::<f64>::randn(&[3, 4], 2.0, &mut rng);
        let err = finite_diff_check(|g, v| g.sum(v), &x, DEFAULT_STEP).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn softmax_cross_entropy_on_three_logits() {
        let x = Tensor::<f64>::matrix(1, 3, vec![0.3, -1.2, 2.0]).unwrap();
        let err = finite_diff_check(|g, v| g.cross_entropy(v, &[1]), &x, DEFAULT_STEP).unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
