//! Reverse-mode automatic differentiation over a Wengert list.
//!
//! A [`Graph`] records every operation in append order, so the append order
//! is already a topological order and `backward` is a single reverse sweep.

use crate::scalar::Scalar;
use crate::tensor::{dim_err, matmul_nt, matmul_raw, matmul_tn, Result, Tensor, TensorError};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T: Scalar> {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddConst(Var),
    AddRow(Var, Var),
    Softmax(Var),
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Vec<T>, inv_std: Vec<T> },
    Gelu(Var),
    Sigmoid(Var),
    Relu(Var),
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    SliceRows { x: Var, start: usize },
    ConcatRows(Vec<Var>),
    MeanRows(Var),
    Sum(Var),
    Mean(Var),
    CrossEntropy { logits: Var, targets: Vec<usize>, probs: Vec<T> },
    GatherRows { table: Var, ids: Vec<usize> },
}

impl<T: Scalar> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(_) => "transpose",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddConst(_) => "add_const",
            Op::AddRow(..) => "add_row",
            Op::Softmax(_) => "softmax_rows",
            Op::LayerNorm { .. } => "layer_norm",
            Op::Gelu(_) => "gelu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Relu(_) => "relu",
            Op::SliceCols { .. } => "slice_cols",
            Op::ConcatCols(_) => "concat_cols",
            Op::SliceRows { .. } => "slice_rows",
            Op::ConcatRows(_) => "concat_rows",
            Op::MeanRows(_) => "mean_rows",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::GatherRows { .. } => "gather_rows",
        }
    }
}

#[derive(Debug, Clone)]
struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Record of one operation, as exposed for inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpRecord {
    pub op: &'static str,
    pub inputs: Vec<usize>,
    pub output: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dims2()
    }

    /// Gradient of the last `backward` call, if `v` required one.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].value.grad.as_deref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn records(&self) -> Vec<OpRecord> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| OpRecord { op: n.op.name(), inputs: inputs_of(&n.op), output: i })
            .collect()
    }

    pub fn leaf(&mut self, t: Tensor<T>) -> Result<Var> {
        if !t.is_finite() {
            return Err(TensorError::Numeric { op: "leaf" });
        }
        let requires_grad = t.requires_grad;
        let mut value = t;
        value.grad = None;
        Ok(self.push(value, Op::Leaf, requires_grad))
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Result<Var> {
        self.leaf(t.detach())
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn emit(&mut self, op: Op<T>, shape: Vec<usize>, data: Vec<T>, inputs: &[Var]) -> Result<Var> {
        let name = op.name();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::Numeric { op: name });
        }
        let value = Tensor::new(shape, data)?;
        let rg = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(value, op, rg))
    }

    fn data(&self, v: Var) -> &[T] {
        self.nodes[v.0].value.data()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(dim_err("matmul", format!("{m}x{k} @ {k2}x{n}")));
        }
        let out = matmul_raw(self.data(a), self.data(b), m, k, n);
        self.emit(Op::MatMul(a, b), vec![m, n], out, &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a).transpose();
        let shape = t.shape().to_vec();
        self.emit(Op::Transpose(a), shape, t.into_data(), &[a])
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(dim_err(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x + *y).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Add(a, b), shape, out, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x - *y).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Sub(a, b), shape, out, &[a, b])
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x * *y).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Mul(a, b), shape, out, &[a, b])
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        let out = self.data(a).iter().map(|x| *x * c).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Scale(a, c), shape, out, &[a])
    }

    pub fn add_scalar(&mut self, a: Var, c: T) -> Result<Var> {
        let out = self.data(a).iter().map(|x| *x + c).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::AddConst(a), shape, out, &[a])
    }

    /// `a[n×d] + b[d]`, the bias broadcast over rows.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, d) = self.dims(a);
        if self.value(b).numel() != d {
            return Err(dim_err("add_row", format!("bias of {} for width {d}", self.value(b).numel())));
        }
        let bias = self.data(b).to_vec();
        let mut out = self.data(a).to_vec();
        for i in 0..n {
            for (o, bv) in out[i * d..(i + 1) * d].iter_mut().zip(&bias) {
                *o += *bv;
            }
        }
        let shape = self.shape(a).to_vec();
        self.emit(Op::AddRow(a, b), shape, out, &[a, b])
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims(a);
        let out = softmax_rows_raw(self.data(a), r, c);
        let shape = self.shape(a).to_vec();
        self.emit(Op::Softmax(a), shape, out, &[a])
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let (n, d) = self.dims(x);
        if d < 2 {
            return Err(dim_err("layer_norm", format!("row width {d} < 2")));
        }
        if self.value(gain).numel() != d || self.value(bias).numel() != d {
            return Err(dim_err("layer_norm", "gain/bias width mismatch"));
        }
        let eps = T::c(LAYER_NORM_EPS);
        let dn = T::from_usize_lossy(d);
        let xs = self.data(x);
        let g = self.data(gain);
        let b = self.data(bias);
        let mut xhat = vec![T::zero(); n * d];
        let mut inv_std = vec![T::zero(); n];
        let mut out = vec![T::zero(); n * d];
        for i in 0..n {
            let row = &xs[i * d..(i + 1) * d];
            let mean = row.iter().copied().sum::<T>() / dn;
            let var = row.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / dn;
            let is = T::one() / (var + eps).sqrt();
            inv_std[i] = is;
            for j in 0..d {
                let h = (row[j] - mean) * is;
                xhat[i * d + j] = h;
                out[i * d + j] = h * g[j] + b[j];
            }
        }
        let shape = self.shape(x).to_vec();
        self.emit(Op::LayerNorm { x, gain, bias, xhat, inv_std }, shape, out, &[x, gain, bias])
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Result<Var> {
        let out = self.data(a).iter().map(|x| gelu(*x)).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Gelu(a), shape, out, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.data(a).iter().map(|x| sigmoid(*x)).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Sigmoid(a), shape, out, &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.data(a).iter().map(|x| x.max(T::zero())).collect();
        let shape = self.shape(a).to_vec();
        self.emit(Op::Relu(a), shape, out, &[a])
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (n, d) = self.dims(x);
        if len == 0 || start + len > d {
            return Err(dim_err("slice_cols", format!("[{start}, {}) of width {d}", start + len)));
        }
        let src = self.data(x);
        let out = (0..n).flat_map(|i| src[i * d + start..i * d + start + len].iter().copied()).collect();
        self.emit(Op::SliceCols { x, start }, vec![n, len], out, &[x])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let n = parts.first().map(|p| self.dims(*p).0).ok_or_else(|| dim_err("concat_cols", "no inputs"))?;
        if parts.iter().any(|p| self.dims(*p).0 != n) {
            return Err(dim_err("concat_cols", "row counts differ"));
        }
        let total: usize = parts.iter().map(|p| self.dims(*p).1).sum();
        let mut out = Vec::with_capacity(n * total);
        for i in 0..n {
            for p in parts {
                let w = self.dims(*p).1;
                out.extend_from_slice(&self.data(*p)[i * w..(i + 1) * w]);
            }
        }
        self.emit(Op::ConcatCols(parts.to_vec()), vec![n, total], out, parts)
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (n, d) = self.dims(x);
        if len == 0 || start + len > n {
            return Err(dim_err("slice_rows", format!("[{start}, {}) of {n} rows", start + len)));
        }
        let out = self.data(x)[start * d..(start + len) * d].to_vec();
        self.emit(Op::SliceRows { x, start }, vec![len, d], out, &[x])
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let d = parts.first().map(|p| self.dims(*p).1).ok_or_else(|| dim_err("concat_rows", "no inputs"))?;
        if parts.iter().any(|p| self.dims(*p).1 != d) {
            return Err(dim_err("concat_rows", "widths differ"));
        }
        let n: usize = parts.iter().map(|p| self.dims(*p).0).sum();
        let mut out = Vec::with_capacity(n * d);
        for p in parts {
            out.extend_from_slice(self.data(*p));
        }
        self.emit(Op::ConcatRows(parts.to_vec()), vec![n, d], out, parts)
    }

    /// Column means, `[n×d] -> [1×d]`.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let (n, d) = self.dims(x);
        let src = self.data(x);
        let nn = T::from_usize_lossy(n);
        let out = (0..d).map(|j| (0..n).map(|i| src[i * d + j]).sum::<T>() / nn).collect();
        self.emit(Op::MeanRows(x), vec![1, d], out, &[x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).sum();
        self.emit(Op::Sum(x), vec![1], vec![s], &[x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let n = T::from_usize_lossy(self.value(x).numel());
        let s = self.value(x).sum() / n;
        self.emit(Op::Mean(x), vec![1], vec![s], &[x])
    }

    /// Mean negative log-likelihood of `targets` under row-wise softmax of `logits`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let (n, c) = self.dims(logits);
        if targets.len() != n {
            return Err(dim_err("cross_entropy", format!("{} targets for {n} rows", targets.len())));
        }
        if let Some(t) = targets.iter().find(|t| **t >= c) {
            return Err(TensorError::Index(format!("target class {t} >= {c}")));
        }
        let probs = softmax_rows_raw(self.data(logits), n, c);
        let src = self.data(logits);
        let mut loss = T::zero();
        for (i, t) in targets.iter().enumerate() {
            let row = &src[i * c..(i + 1) * c];
            let mx = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = mx + row.iter().map(|v| (*v - mx).exp()).sum::<T>().ln();
            loss += lse - row[*t];
        }
        loss /= T::from_usize_lossy(n);
        let op = Op::CrossEntropy { logits, targets: targets.to_vec(), probs };
        self.emit(op, vec![1], vec![loss], &[logits])
    }

    /// Embedding lookup: rows `ids` of `table`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (v, d) = self.dims(table);
        if ids.is_empty() {
            return Err(dim_err("gather_rows", "empty id list"));
        }
        if let Some(bad) = ids.iter().find(|i| **i >= v) {
            return Err(TensorError::Index(format!("row {bad} of a {v}-row table")));
        }
        let src = self.data(table);
        let out = ids.iter().flat_map(|i| src[i * d..(i + 1) * d].iter().copied()).collect();
        self.emit(Op::GatherRows { table, ids: ids.to_vec() }, vec![ids.len(), d], out, &[table])
    }

    /// Reverse sweep from a scalar `loss`. Gradients accumulate across
    /// fan-out; nodes that do not require a gradient get no buffer.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(TensorError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        for n in &mut self.nodes {
            n.value.grad = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let node = &self.nodes[idx];
            let contributions = self.local_grads(&node.op, &node.value, &g);
            for (input, contrib) in contributions {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut grads[input.0] {
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(&contrib) {
                            *a += *c;
                        }
                    }
                    slot @ None => *slot = Some(contrib),
                }
            }
            self.nodes[idx].value.grad = Some(g);
        }
        for (idx, n) in self.nodes.iter_mut().enumerate() {
            if !matches!(n.op, Op::Leaf) || !n.requires_grad {
                n.value.grad = None;
            } else if n.value.grad.is_none() && idx <= loss.0 {
                n.value.grad = Some(vec![T::zero(); n.value.numel()]);
            }
        }
        Ok(())
    }

    fn local_grads(&self, op: &Op<T>, out: &Tensor<T>, g: &[T]) -> Vec<(Var, Vec<T>)> {
        match op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) => {
                let (m, k) = self.dims(*a);
                let n = self.dims(*b).1;
                let mut res = Vec::with_capacity(2);
                if self.requires_grad(*a) {
                    res.push((*a, matmul_nt(g, self.data(*b), m, n, k)));
                }
                if self.requires_grad(*b) {
                    res.push((*b, matmul_tn(self.data(*a), g, m, k, n)));
                }
                res
            }
            Op::Transpose(a) => {
                let (r, c) = out.dims2();
                let mut t = vec![T::zero(); r * c];
                for i in 0..r {
                    for j in 0..c {
                        t[j * r + i] = g[i * c + j];
                    }
                }
                vec![(*a, t)]
            }
            Op::Add(a, b) => vec![(*a, g.to_vec()), (*b, g.to_vec())],
            Op::Sub(a, b) => vec![(*a, g.to_vec()), (*b, g.iter().map(|v| -*v).collect())],
            Op::Mul(a, b) => {
                let da = g.iter().zip(self.data(*b)).map(|(x, y)| *x * *y).collect();
                let db = g.iter().zip(self.data(*a)).map(|(x, y)| *x * *y).collect();
                vec![(*a, da), (*b, db)]
            }
            Op::Scale(a, c) => vec![(*a, g.iter().map(|v| *v * *c).collect())],
            Op::AddConst(a) => vec![(*a, g.to_vec())],
            Op::AddRow(a, b) => {
                let (n, d) = out.dims2();
                let mut db = vec![T::zero(); d];
                for i in 0..n {
                    for j in 0..d {
                        db[j] += g[i * d + j];
                    }
                }
                vec![(*a, g.to_vec()), (*b, db)]
            }
            Op::Softmax(a) => {
                let (r, c) = out.dims2();
                let y = out.data();
                let mut dx = vec![T::zero(); r * c];
                for i in 0..r {
                    let row = i * c..(i + 1) * c;
                    let dot: T = y[row.clone()].iter().zip(&g[row.clone()]).map(|(p, q)| *p * *q).sum();
                    for j in row {
                        dx[j] = y[j] * (g[j] - dot);
                    }
                }
                vec![(*a, dx)]
            }
            Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
                let (n, d) = out.dims2();
                let gv = self.data(*gain);
                let dn = T::from_usize_lossy(d);
                let mut dgain = vec![T::zero(); d];
                let mut dbias = vec![T::zero(); d];
                let mut dx = vec![T::zero(); n * d];
                for i in 0..n {
                    let mut mean_dh = T::zero();
                    let mut mean_dh_h = T::zero();
                    for j in 0..d {
                        let k = i * d + j;
                        dgain[j] += g[k] * xhat[k];
                        dbias[j] += g[k];
                        let dh = g[k] * gv[j];
                        mean_dh += dh;
                        mean_dh_h += dh * xhat[k];
                    }
                    mean_dh /= dn;
                    mean_dh_h /= dn;
                    for j in 0..d {
                        let k = i * d + j;
                        let dh = g[k] * gv[j];
                        dx[k] = inv_std[i] * (dh - mean_dh - xhat[k] * mean_dh_h);
                    }
                }
                vec![(*x, dx), (*gain, dgain), (*bias, dbias)]
            }
            Op::Gelu(a) => {
                let dx = g.iter().zip(self.data(*a)).map(|(gv, x)| *gv * gelu_grad(*x)).collect();
                vec![(*a, dx)]
            }
            Op::Sigmoid(a) => {
                let dx = g.iter().zip(out.data()).map(|(gv, s)| *gv * *s * (T::one() - *s)).collect();
                vec![(*a, dx)]
            }
            Op::Relu(a) => {
                let dx = g
                    .iter()
                    .zip(self.data(*a))
                    .map(|(gv, x)| if *x > T::zero() { *gv } else { T::zero() })
                    .collect();
                vec![(*a, dx)]
            }
            Op::SliceCols { x, start } => {
                let (n, d) = self.dims(*x);
                let len = out.dims2().1;
                let mut dx = vec![T::zero(); n * d];
                for i in 0..n {
                    dx[i * d + start..i * d + start + len].copy_from_slice(&g[i * len..(i + 1) * len]);
                }
                vec![(*x, dx)]
            }
            Op::ConcatCols(parts) => {
                let (n, total) = out.dims2();
                let mut off = 0;
                parts
                    .iter()
                    .map(|p| {
                        let w = self.dims(*p).1;
                        let mut dp = Vec::with_capacity(n * w);
                        for i in 0..n {
                            dp.extend_from_slice(&g[i * total + off..i * total + off + w]);
                        }
                        off += w;
                        (*p, dp)
                    })
                    .collect()
            }
            Op::SliceRows { x, start } => {
                let (n, d) = self.dims(*x);
                let mut dx = vec![T::zero(); n * d];
                dx[start * d..start * d + g.len()].copy_from_slice(g);
                vec![(*x, dx)]
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                parts
                    .iter()
                    .map(|p| {
                        let len = self.value(*p).numel();
                        let dp = g[off..off + len].to_vec();
                        off += len;
                        (*p, dp)
                    })
                    .collect()
            }
            Op::MeanRows(x) => {
                let (n, d) = self.dims(*x);
                let nn = T::from_usize_lossy(n);
                let dx = (0..n * d).map(|k| g[k % d] / nn).collect();
                vec![(*x, dx)]
            }
            Op::Sum(x) => vec![(*x, vec![g[0]; self.value(*x).numel()])],
            Op::Mean(x) => {
                let n = self.value(*x).numel();
                vec![(*x, vec![g[0] / T::from_usize_lossy(n); n])]
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let (n, c) = self.dims(*logits);
                let scale = g[0] / T::from_usize_lossy(n);
                let mut dx: Vec<T> = probs.iter().map(|p| *p * scale).collect();
                for (i, t) in targets.iter().enumerate() {
                    dx[i * c + t] -= scale;
                }
                vec![(*logits, dx)]
            }
            Op::GatherRows { table, ids } => {
                let (v, d) = self.dims(*table);
                let mut dt = vec![T::zero(); v * d];
                for (r, id) in ids.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] += g[r * d + j];
                    }
                }
                vec![(*table, dt)]
            }
        }
    }
}

fn inputs_of<T: Scalar>(op: &Op<T>) -> Vec<usize> {
    let vs: Vec<Var> = match op {
        Op::Leaf => vec![],
        Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::AddRow(a, b) => vec![*a, *b],
        Op::Transpose(a)
        | Op::Scale(a, _)
        | Op::AddConst(a)
        | Op::Softmax(a)
        | Op::Gelu(a)
        | Op::Sigmoid(a)
        | Op::Relu(a)
        | Op::MeanRows(a)
        | Op::Sum(a)
        | Op::Mean(a) => vec![*a],
        Op::LayerNorm { x, gain, bias, .. } => vec![*x, *gain, *bias],
        Op::SliceCols { x, .. } | Op::SliceRows { x, .. } => vec![*x],
        Op::ConcatCols(p) | Op::ConcatRows(p) => p.clone(),
        Op::CrossEntropy { logits, .. } => vec![*logits],
        Op::GatherRows { table, .. } => vec![*table],
    };
    vs.into_iter().map(|v| v.0).collect()
}

pub(crate) fn softmax_rows_raw<T: Scalar>(src: &[T], r: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); r * c];
    for i in 0..r {
        let row = &src[i * c..(i + 1) * c];
        let mx = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for j in 0..c {
            let e = (row[j] - mx).exp();
            out[i * c + j] = e;
            s += e;
        }
        for v in &mut out[i * c..(i + 1) * c] {
            *v /= s;
        }
    }
    out
}

const GELU_K: f64 = 0.044_715;

fn gelu<T: Scalar>(x: T) -> T {
    let c = T::c((2.0 / std::f64::consts::PI).sqrt());
    let u = c * (x + T::c(GELU_K) * x * x * x);
    T::c(0.5) * x * (T::one() + u.tanh())
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::c((2.0 / std::f64::consts::PI).sqrt());
    let u = c * (x + T::c(GELU_K) * x * x * x);
    let th = u.tanh();
    let du = c * (T::one() + T::c(3.0 * GELU_K) * x * x);
    T::c(0.5) * (T::one() + th) + T::c(0.5) * x * (T::one() - th * th) * du
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
