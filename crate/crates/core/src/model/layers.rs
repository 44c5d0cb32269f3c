//! Building blocks: scaled dot-product attention, LoRA projections,
//! prefix concatenation and the gated fusion unit.

use crate::autodiff::{Graph, Var};
use crate::scalar::Scalar;
use crate::tensor::{dim_err, Result, Tensor};

/// Mask entry for disallowed attention pairs; finite so every stored value
/// stays finite, and large enough that `exp` underflows to zero.
pub const MASKED: f64 = -1e9;

/// `α = softmax(Q Kᵀ / √d_k [+ mask])`, output `α V`. Returns `(output, α)`.
pub fn attention<T: Scalar>(g: &mut Graph<T>, q: Var, k: Var, v: Var, mask: Option<Var>) -> Result<(Var, Var)> {
    let (p, dk) = g.dims(q);
    let (nk, dk2) = g.dims(k);
    let (nv, _) = g.dims(v);
    if dk != dk2 {
        return Err(dim_err("attention", format!("query width {dk} vs key width {dk2}")));
    }
    if nk != nv {
        return Err(dim_err("attention", format!("{nk} keys vs {nv} values")));
    }
    let kt = g.transpose(k)?;
    let scores = g.matmul(q, kt)?;
    let scale = T::one() / T::from_usize_lossy(dk).sqrt();
    let mut scaled = g.scale(scores, scale)?;
    if let Some(m) = mask {
        if g.dims(m) != (p, nk) {
            return Err(dim_err("attention", "mask shape mismatch"));
        }
        scaled = g.add(scaled, m)?;
    }
    let alpha = g.softmax_rows(scaled)?;
    let out = g.matmul(alpha, v)?;
    Ok((out, alpha))
}

/// Convenience wrapper evaluating [`attention`] on plain tensors.
pub fn attention_tensors<T: Scalar>(q: &Tensor<T>, k: &Tensor<T>, v: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let mut g = Graph::new();
    let (qv, kv, vv) = (g.constant(q.clone())?, g.constant(k.clone())?, g.constant(v.clone())?);
    let (o, a) = attention(&mut g, qv, kv, vv, None)?;
    Ok((g.value(o).clone(), g.value(a).clone()))
}

/// Frozen base weight `W0[d×d]` plus the trainable low-rank factors
/// `A[d×r]`, `B[r×d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraLayer<T: Scalar> {
    pub w0: Tensor<T>,
    pub a: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Scalar> LoraLayer<T> {
    pub fn new(w0: Tensor<T>, a: Tensor<T>, b: Tensor<T>) -> Result<Self> {
        let (d, d2) = w0.dims2();
        let (da, r) = a.dims2();
        let (rb, db) = b.dims2();
        if d != d2 || da != d || rb != r || db != d {
            return Err(dim_err(
                "lora",
                format!("W0 {d}x{d2}, A {da}x{r}, B {rb}x{db}"),
            ));
        }
        Ok(Self { w0, a, b })
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    /// `W0 + A·B` as a standalone weight.
    pub fn merge(&self) -> Result<Tensor<T>> {
        self.w0.add(&self.a.matmul(&self.b)?)
    }

    /// `x·W0 + (x·A)·B`, never materialising the merged weight.
    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone())?;
        let (w0, a, b) = (g.constant(self.w0.clone())?, g.constant(self.a.clone())?, g.constant(self.b.clone())?);
        let y = lora_apply(&mut g, xv, w0, a, b)?;
        Ok(g.value(y).clone())
    }
}

/// Graph form of the LoRA projection. Gradients reach `a` and `b`; `w0` is
/// expected to be bound without gradient tracking.
pub fn lora_apply<T: Scalar>(g: &mut Graph<T>, x: Var, w0: Var, a: Var, b: Var) -> Result<Var> {
    let base = g.matmul(x, w0)?;
    let xa = g.matmul(x, a)?;
    let delta = g.matmul(xa, b)?;
    g.add(base, delta)
}

/// `[p_1..p_m; x_1..x_n]`. An empty prefix returns the tokens unchanged.
pub fn prefix_concat<T: Scalar>(g: &mut Graph<T>, prefix: Option<Var>, tokens: Var) -> Result<Var> {
    match prefix {
        None => Ok(tokens),
        Some(p) => {
            if g.dims(p).1 != g.dims(tokens).1 {
                return Err(dim_err("prefix_concat", format!("prefix width {} vs token width {}", g.dims(p).1, g.dims(tokens).1)));
            }
            g.concat_rows(&[p, tokens])
        }
    }
}

/// Learnable prefix embeddings `P[m×d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixBank<T: Scalar> {
    pub embeddings: Option<Tensor<T>>,
    pub width: usize,
}

impl<T: Scalar> PrefixBank<T> {
    pub fn len(&self) -> usize {
        self.embeddings.as_ref().map_or(0, |e| e.rows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn concat(&self, tokens: &Tensor<T>) -> Result<Tensor<T>> {
        if tokens.cols() != self.width {
            return Err(dim_err("prefix_concat", format!("token width {} vs prefix width {}", tokens.cols(), self.width)));
        }
        let mut g = Graph::new();
        let p = match &self.embeddings {
            Some(e) => Some(g.constant(e.clone())?),
            None => None,
        };
        let t = g.constant(tokens.clone())?;
        let out = prefix_concat(&mut g, p, t)?;
        Ok(g.value(out).clone())
    }
}

/// Output of the gating unit together with its gate activations.
#[derive(Debug, Clone, Copy)]
pub struct Fused {
    pub output: Var,
    pub gate: Var,
}

/// `g = σ([visual; textual]·W_g + b_g)`, output `g⊙visual + (1−g)⊙textual`.
pub fn gated_fusion<T: Scalar>(g: &mut Graph<T>, visual: Var, textual: Var, w_gate: Var, b_gate: Var) -> Result<Fused> {
    if g.dims(visual) != g.dims(textual) {
        return Err(dim_err("gated_fusion", "visual and textual summaries differ in shape"));
    }
    let cat = g.concat_cols(&[visual, textual])?;
    let z = g.matmul(cat, w_gate)?;
    let z = g.add_row(z, b_gate)?;
    let gate = g.sigmoid(z)?;
    let gv = g.mul(gate, visual)?;
    let neg = g.scale(gate, -T::one())?;
    let one_minus = g.add_scalar(neg, T::one())?;
    let gt = g.mul(one_minus, textual)?;
    let output = g.add(gv, gt)?;
    Ok(Fused { output, gate })
}

/// Sinusoidal position encoding, `[n×d]`.
pub fn position_encoding<T: Scalar>(n: usize, d: usize) -> Tensor<T> {
    let mut data = vec![T::zero(); n * d];
    for pos in 0..n {
        for i in 0..d {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
            data[pos * d + i] = T::c(if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    Tensor::matrix(n, d, data).expect("positive extents")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn t(rows: &[&[f64]]) -> Tensor<f64> {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn single_key_attention() {
        let q = t(&[&[0.3, -1.0], &[2.0, 0.5]]);
        let k = t(&[&[1.0, 1.0]]);
        let v = t(&[&[4.0, -2.0, 7.0]]);
        let (o, a) = attention_tensors(&q, &k, &v).unwrap();
        assert_eq!(a.data(), &[1.0, 1.0]);
        assert_eq!(o.row(0), v.row(0));
        assert_eq!(o.row(1), v.row(0));
    }

    #[test]
    fn identical_keys_give_uniform_weights() {
        let mut rng = seeded(4);
        let q = Tensor::<f64>::randn(&[3, 2], 1.0, &mut rng);
        let k = t(&[&[0.5, 0.1], &[0.5, 0.1], &[0.5, 0.1], &[0.5, 0.1]]);
        let v = Tensor::<f64>::randn(&[4, 2], 1.0, &mut rng);
        let (_, a) = attention_tensors(&q, &k, &v).unwrap();
        assert!(a.data().iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hand_evaluated_attention() {
        let q = t(&[&[1.0], &[0.0]]);
        let k = t(&[&[1.0], &[0.0]]);
        let v = t(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let (o, a) = attention_tensors(&q, &k, &v).unwrap();
        let e = std::f64::consts::E;
        assert!((a.at(0, 0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((a.at(0, 0) - 0.731).abs() < 1e-3);
        assert!((a.at(0, 1) - 0.269).abs() < 1e-3);
        assert_eq!(a.row(1), &[0.5, 0.5]);
        assert_eq!(o.row(0), a.row(0));
    }

    #[test]
    fn attention_width_mismatch() {
        let q = t(&[&[1.0, 2.0]]);
        let k = t(&[&[1.0]]);
        assert!(attention_tensors(&q, &k, &k).is_err());
    }

    fn random_lora(d: usize, r: usize, seed: u64) -> LoraLayer<f64> {
        let mut rng = seeded(seed);
        LoraLayer::new(
            Tensor::randn(&[d, d], 1.0, &mut rng),
            Tensor::randn(&[d, r], 1.0, &mut rng),
            Tensor::randn(&[r, d], 1.0, &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn zero_factor_is_identity_delta() {
        let mut l = random_lora(6, 2, 1);
        let x = Tensor::randn(&[3, 6], 1.0, &mut seeded(9));
        let plain = x.matmul(&l.w0).unwrap();
        let saved_b = l.b.clone();
        l.a = Tensor::zeros(&[6, 2]);
        assert_eq!(l.apply(&x).unwrap(), plain);
        assert_eq!(l.merge().unwrap(), l.w0);
        l.a = Tensor::randn(&[6, 2], 1.0, &mut seeded(2));
        l.b = Tensor::zeros(&[2, 6]);
        assert_eq!(l.apply(&x).unwrap(), plain);
        assert_eq!(l.merge().unwrap(), l.w0);
        let _ = saved_b;
    }

    #[test]
    fn merge_by_hand() {
        let w0 = t(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let l = LoraLayer::new(w0, t(&[&[1.0], &[0.0]]), t(&[&[0.0, 1.0]])).unwrap();
        assert_eq!(l.merge().unwrap().data(), &[1.0, 3.0, 3.0, 4.0]);
    }

    #[test]
    fn apply_matches_merge() {
        let l = random_lora(8, 3, 5);
        let x = Tensor::randn(&[4, 8], 1.0, &mut seeded(6));
        let via_merge = x.matmul(&l.merge().unwrap()).unwrap();
        assert!(l.apply(&x).unwrap().max_abs_diff(&via_merge) < 1e-10);
    }

    #[test]
    fn prefix_examples() {
        let mut rng = seeded(7);
        let tokens = Tensor::<f64>::randn(&[32, 4], 1.0, &mut rng);
        let empty = PrefixBank { embeddings: None, width: 4 };
        assert_eq!(empty.concat(&tokens).unwrap(), tokens);
        let bank = PrefixBank { embeddings: Some(Tensor::randn(&[16, 4], 1.0, &mut rng)), width: 4 };
        let out = bank.concat(&tokens).unwrap();
        assert_eq!(out.rows(), 48);
        for k in 0..32 {
            assert_eq!(out.row(16 + k), tokens.row(k));
        }
        let wrong = Tensor::<f64>::zeros(&[2, 3]);
        assert!(bank.concat(&wrong).is_err());
    }

    fn fuse(bias: f64, visual: &[f64], textual: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = visual.len();
        let mut rng = seeded(3);
        let mut g = Graph::<f64>::new();
        let v = g.leaf(Tensor::matrix(1, d, visual.to_vec()).unwrap()).unwrap();
        let tx = g.leaf(Tensor::matrix(1, d, textual.to_vec()).unwrap()).unwrap();
        let w = g.leaf(Tensor::randn(&[2 * d, d], 0.1, &mut rng)).unwrap();
        let b = g.leaf(Tensor::full(&[d], bias)).unwrap();
        let f = gated_fusion(&mut g, v, tx, w, b).unwrap();
        (g.value(f.output).data().to_vec(), g.value(f.gate).data().to_vec())
    }

    #[test]
    fn gate_extremes_and_fixed_point() {
        let v = [0.4, -1.5, 2.0];
        let tx = [3.0, 0.25, -0.5];
        let (out, gate) = fuse(80.0, &v, &tx);
        assert!(gate.iter().all(|x| *x == 1.0));
        assert_eq!(out, v);
        let (out, gate) = fuse(-80.0, &v, &tx);
        assert!(gate.iter().all(|x| *x < 1e-30));
        for (o, t) in out.iter().zip(tx) {
            assert!((o - t).abs() < 1e-15);
        }
        let (out, _) = fuse(0.3, &v, &v);
        for (o, x) in out.iter().zip(v) {
            assert!((o - x).abs() < 1e-15);
        }
    }
}
