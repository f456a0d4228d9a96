//! Small dense tensors of rank at most two.
//!
//! Vectors are column vectors (`n x 1`) and scalars are `1 x 1`. Storage is
//! row-major `f64`.

use std::fmt;

/// Rows and columns of a tensor value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const SCALAR: Shape = Shape { rows: 1, cols: 1 };

    pub const fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub const fn vector(len: usize) -> Self {
        Shape { rows: len, cols: 1 }
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn is_column(&self) -> bool {
        self.cols == 1
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Self {
        assert_eq!(shape.len(), data.len(), "tensor data does not match shape {shape}");
        Tensor { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor { shape, data: vec![0.0; shape.len()] }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Tensor { shape, data: vec![value; shape.len()] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: Shape::SCALAR, data: vec![value] }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor { shape: Shape::vector(values.len()), data: values }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(Shape::new(n, n));
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_scalar()
    }

    /// The single entry of a scalar.
    pub fn item(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape.cols + col]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// `self += other`, where a `1 x 1` `other` is broadcast over every entry.
    pub fn add_assign_broadcast(&mut self, other: &Tensor) {
        if other.shape == self.shape {
            for (a, b) in self.data.iter_mut().zip(&other.data) {
                *a += b;
            }
        } else {
            debug_assert!(other.is_scalar());
            let b = other.data[0];
            for a in &mut self.data {
                *a += b;
            }
        }
    }

    /// `self += alpha * other` for equal shapes.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&self, alpha: f64) -> Tensor {
        self.map(|v| alpha * v)
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Tensor) -> Tensor {
        let (m, k) = (self.shape.rows, self.shape.cols);
        debug_assert_eq!(k, rhs.shape.rows);
        let n = rhs.shape.cols;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let mut acc = 0.0;
                for (p, a) in row.iter().enumerate() {
                    acc += a * rhs.data[p * n + j];
                }
                out[i * n + j] = acc;
            }
        }
        Tensor { shape: Shape::new(m, n), data: out }
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn transpose_matmul(&self, rhs: &Tensor) -> Tensor {
        let (k, m) = (self.shape.rows, self.shape.cols);
        debug_assert_eq!(k, rhs.shape.rows);
        let n = rhs.shape.cols;
        let mut out = vec![0.0; m * n];
        for p in 0..k {
            for i in 0..m {
                let a = self.data[p * m + i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * rhs.data[p * n + j];
                }
            }
        }
        Tensor { shape: Shape::new(m, n), data: out }
    }

    /// Accumulates the outer product `lhs * rhsᵀ` into `self`.
    pub fn add_outer(&mut self, lhs: &Tensor, rhs: &Tensor) {
        let (m, n) = (self.shape.rows, self.shape.cols);
        debug_assert_eq!(lhs.data.len(), m);
        debug_assert_eq!(rhs.data.len(), n);
        for i in 0..m {
            let a = lhs.data[i];
            for j in 0..n {
                self.data[i * n + j] += a * rhs.data[j];
            }
        }
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Tensor {
    /// Scalars print bare; everything else prints as a flat bracketed list.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_scalar() {
            return write!(f, "{}", self.data[0]);
        }
        f.write_str("[")?;
        for (i, v) in self.data.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}
