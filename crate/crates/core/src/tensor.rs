//! Dense row-major tensors.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },
    #[error("numeric error in {op}: non-finite value produced")]
    Numeric { op: &'static str },
    #[error("contract error: {0}")]
    Contract(String),
    #[error("index error: {0}")]
    Index(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> TensorError {
    TensorError::Dimension { op, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
    pub requires_grad: bool,
    pub grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(dim_err("new", format!("extents must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(dim_err(
                "new",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data, requires_grad: false, grad: None })
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(dim_err("from_rows", "ragged rows"));
        }
        Self::new(vec![r, c], rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn vector(data: Vec<T>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn scalar(x: T) -> Self {
        Self { shape: vec![1], data: vec![x], requires_grad: false, grad: None }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; n], requires_grad: false, grad: None }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, T::one())
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    /// Gaussian entries with standard deviation `std`.
    pub fn randn(shape: &[usize], std: f64, rng: &mut Rng) -> Self {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::c(z * std)
            })
            .collect();
        Self { shape: shape.to_vec(), data, requires_grad: false, grad: None }
    }

    pub fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let n = shape.iter().product();
        let data = (0..n).map(|_| T::c(rng.random_range(lo..hi))).collect();
        Self { shape: shape.to_vec(), data, requires_grad: false, grad: None }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// `(rows, cols)`; a rank-1 tensor is viewed as a single row.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            s => (s[..s.len() - 1].iter().product(), s[s.len() - 1]),
        }
    }

    pub fn rows(&self) -> usize {
        self.dims2().0
    }

    pub fn cols(&self) -> usize {
        self.dims2().1
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let c = self.cols();
        self.data[i * c + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(dim_err("reshape", format!("{:?} -> {shape:?}", self.shape)));
        }
        self.shape = shape;
        self.grad = None;
        Ok(self)
    }

    pub fn detach(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.clone(), requires_grad: false, grad: None }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = self.dims2();
        let mut out = vec![T::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Self { shape: vec![c, r], data: out, requires_grad: false, grad: None }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    /// Plain matrix product without gradient bookkeeping.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = self.dims2();
        let (k2, n) = other.dims2();
        if k != k2 {
            return Err(dim_err("matmul", format!("{m}x{k} @ {k2}x{n}")));
        }
        let out = matmul_raw(&self.data, &other.data, m, k, n);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::Numeric { op: "matmul" });
        }
        Self::matrix(m, n, out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(dim_err("add", format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Self::new(self.shape.clone(), data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(dim_err("sub", format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Self::new(self.shape.clone(), data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| f(*v)).collect(),
            requires_grad: false,
            grad: None,
        }
    }

    /// Values converted to `f64`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.f64()).collect()
    }
}

pub(crate) fn matmul_raw<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aip * *bv;
            }
        }
    }
    c
}

/// `a[m×k] · b[n×k]ᵀ`
pub(crate) fn matmul_nt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = T::zero();
            for (x, y) in arow.iter().zip(brow) {
                s += *x * *y;
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// `a[k×m]ᵀ · b[k×n]`
pub(crate) fn matmul_tn<T: Scalar>(a: &[T], b: &[T], k: usize, m: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for (i, aval) in arow.iter().enumerate() {
            if *aval == T::zero() {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += *aval * *bv;
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::<f64>::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::<f64>::new(vec![0, 2], vec![]).is_err());
        assert_eq!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 6]).unwrap().dims2(), (2, 3));
    }

    #[test]
    fn transposed_products_agree_with_plain_product() {
        let mut rng = crate::rng::seeded(3);
        let a = Tensor::<f64>::randn(&[3, 4], 1.0, &mut rng);
        let b = Tensor::<f64>::randn(&[4, 5], 1.0, &mut rng);
        let ab = a.matmul(&b).unwrap();
        let bt = b.transpose();
        let nt = matmul_nt(a.data(), bt.data(), 3, 4, 5);
        let at = a.transpose();
        let tn = matmul_tn(at.data(), b.data(), 4, 3, 5);
        for i in 0..15 {
            assert!((nt[i] - ab.data()[i]).abs() < 1e-12);
            assert!((tn[i] - ab.data()[i]).abs() < 1e-12);
        }
    }
}
