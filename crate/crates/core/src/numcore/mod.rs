//! Dense 2-D tensors, a reverse-mode tape, an LSTM cell and Adam.

pub mod gradcheck;
mod graph;
mod lstm;
mod optim;
#[cfg(test)]
mod tests;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

pub use graph::{Gradients, Graph, Var};
pub use lstm::{lstm_cell, lstm_cell_forward, lstm_cell_projected, LstmCellParams};
pub use optim::{adam_step, clip_global_norm, lr_schedule, AdamConfig, OptimizerState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("{op}: index {index} out of range {bound}")]
    IndexOutOfRange { op: &'static str, index: usize, bound: usize },
}

/// Floating type the engine runs in: `f32` for training, `f64` for
/// gradient verification.
pub trait Scalar:
    Float + FromPrimitive + Default + Debug + Display + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    /// `c = a·b + beta·c` with `a` m×k, `b` k×n given by strides and `c`
    /// a row-major m×n buffer.
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], rsa: usize, csa: usize, b: &[Self], rsb: usize, csb: usize, beta: Self, c: &mut [Self]);

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite conversion")
    }
}

fn check_gemm<T>(m: usize, k: usize, n: usize, a: &[T], rsa: usize, csa: usize, b: &[T], rsb: usize, csb: usize, c: &[T]) {
    let last = |rows: usize, cols: usize, rs: usize, cs: usize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * rs + (cols - 1) * cs + 1
        }
    };
    assert!(a.len() >= last(m, k, rsa, csa));
    assert!(b.len() >= last(k, n, rsb, csb));
    assert!(c.len() >= m * n);
}

impl Scalar for f32 {
    fn gemm(m: usize, k: usize, n: usize, a: &[f32], rsa: usize, csa: usize, b: &[f32], rsb: usize, csb: usize, beta: f32, c: &mut [f32]) {
        check_gemm(m, k, n, a, rsa, csa, b, rsb, csb, c);
        // SAFETY: bounds of all three operands were checked above.
        unsafe {
            matrixmultiply::sgemm(
                m, k, n, 1.0,
                a.as_ptr(), rsa as isize, csa as isize,
                b.as_ptr(), rsb as isize, csb as isize,
                beta, c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
}

impl Scalar for f64 {
    fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: usize, csa: usize, b: &[f64], rsb: usize, csb: usize, beta: f64, c: &mut [f64]) {
        check_gemm(m, k, n, a, rsa, csa, b, rsb, csb, c);
        // SAFETY: bounds of all three operands were checked above.
        unsafe {
            matrixmultiply::dgemm(
                m, k, n, 1.0,
                a.as_ptr(), rsa as isize, csa as isize,
                b.as_ptr(), rsb as isize, csb as isize,
                beta, c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
}

/// Row-major tensor. The engine works on matrices; a vector is `[1, n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, NumError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NumError::ShapeMismatch { op: "tensor", left: shape, right: vec![data.len()] });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { shape: vec![rows, cols], data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data length");
        Tensor { shape: vec![rows, cols], data }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Tensor { shape: vec![rows, cols], data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn rows(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[..self.shape.len() - 1].iter().product()
        } else {
            1
        }
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols() + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Element-wise conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|x| U::of(x.to_f64().unwrap())).collect() }
    }

    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>, NumError> {
        let (m, k) = self.dims();
        let (k2, n) = other.dims();
        if k != k2 {
            return Err(NumError::ShapeMismatch { op: "matmul", left: self.shape.clone(), right: other.shape.clone() });
        }
        let mut out = Self::zeros(m, n);
        T::gemm(m, k, n, &self.data, k, 1, &other.data, n, 1, T::zero(), &mut out.data);
        Ok(out)
    }
}

/// Row-wise softmax with max subtraction, in place.
pub fn softmax_rows<T: Scalar>(data: &mut [T], cols: usize) {
    for row in data.chunks_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x = *x / sum;
        }
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Named parameter tensors in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T> Default for ParamStore<T> {
    fn default() -> Self {
        ParamStore { names: Vec::new(), tensors: Vec::new() }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn add(&mut self, name: impl Into<String>, t: Tensor<T>) -> usize {
        self.names.push(name.into());
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: usize) -> &Tensor<T> {
        &self.tensors[id]
    }

    pub fn get_mut(&mut self, id: usize) -> &mut Tensor<T> {
        &mut self.tensors[id]
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore { names: self.names.clone(), tensors: self.tensors.iter().map(Tensor::cast).collect() }
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}
