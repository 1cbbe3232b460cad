//! Dense row-major tensor plus the small set of kernels the rest of the
//! crate is built on.
//!
//! The type is deliberately minimal: a shape vector and a flat buffer.
//! Gradients live on the autodiff tape, not here. Reductions accumulate in
//! `f64` regardless of the element type; matrix multiplication accumulates
//! in the element type (like an ordinary sgemm) because it sits on the hot
//! path.

use crate::error::{CosaError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(CosaError::Shape {
                op: "Tensor::new",
                detail: format!("shape {:?} wants {} elements, got {}", shape, numel, data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![S::zero(); numel] }
    }

    pub fn full(shape: &[usize], value: S) -> Self {
        let numel = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![value; numel] }
    }

    pub fn scalar(value: S) -> Self {
        Tensor { shape: vec![], data: vec![value] }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(CosaError::Shape { op: "Tensor::from_rows", detail: "ragged rows".into() });
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Tensor { shape: vec![r, c], data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Number of rows when the tensor is viewed as 2-D (`[rows, cols]`).
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[1]
    }

    pub fn row(&self, i: usize) -> &[S] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<S>> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(CosaError::Shape {
                op: "reshape",
                detail: format!("{:?} -> {:?}", self.shape, shape),
            });
        }
        Ok(Tensor { shape: shape.to_vec(), data: self.data.clone() })
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Tensor<S> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Sum of all elements, accumulated in f64.
    pub fn sum_f64(&self) -> f64 {
        self.data.iter().map(|x| x.as_f64()).sum()
    }

    pub fn mean_f64(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum_f64() / self.data.len() as f64
        }
    }

    /// Frobenius norm, accumulated in f64.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// 2-D matrix transpose.
    pub fn transpose2(&self) -> Tensor<S> {
        debug_assert_eq!(self.rank(), 2);
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![S::zero(); r * c];
        transpose_into(&self.data, &mut out, r, c);
        Tensor { shape: vec![c, r], data: out }
    }

    /// 2-D matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Tensor<S>) -> Result<Tensor<S>> {
        if self.rank() != 2 || rhs.rank() != 2 || self.shape[1] != rhs.shape[0] {
            return Err(CosaError::Shape {
                op: "matmul",
                detail: format!("{:?} x {:?}", self.shape, rhs.shape),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], rhs.shape[1]);
        let mut out = vec![S::zero(); m * n];
        mm_nn(&self.data, &rhs.data, &mut out, m, k, n);
        Ok(Tensor { shape: vec![m, n], data: out })
    }

    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.data.iter().map(|x| x.as_f32()).collect()
    }

    pub fn from_f32_slice(shape: Vec<usize>, data: &[f32]) -> Result<Tensor<S>> {
        Tensor::new(shape, data.iter().map(|&x| S::from_f32(x)).collect())
    }
}

/// `out = a * b` for row-major `a: m x k`, `b: k x n`.
///
/// Row-times-row saxpy ordering: the inner loop runs over contiguous memory
/// in both `b` and `out`, which lets the compiler vectorize it.
pub fn mm_nn<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for x in out.iter_mut() {
        *x = S::zero();
    }
    mm_nn_acc(a, b, out, m, k, n);
}

/// `out += a * b`; same layout rules as [`mm_nn`].
pub fn mm_nn_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (p, &aip) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o = aip.mul_add(bv, *o);
            }
        }
    }
}

/// `out[j*r + i] = a[i*c + j]` for row-major `a: r x c`.
pub fn transpose_into<S: Scalar>(a: &[S], out: &mut [S], r: usize, c: usize) {
    debug_assert_eq!(a.len(), r * c);
    debug_assert_eq!(out.len(), r * c);
    for i in 0..r {
        let a_row = &a[i * c..(i + 1) * c];
        for (j, &v) in a_row.iter().enumerate() {
            out[j * r + i] = v;
        }
    }
}

/// Dot product accumulated in f64.
pub fn dot_f64<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum()
}

/// Squared Euclidean distance accumulated in f64.
pub fn sq_dist_f64<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t64(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn new_rejects_mismatched_len() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        // Independent oracle: plain i/j/p triple loop in f64.
        let m = 7;
        let k = 5;
        let n = 4;
        let a: Vec<f64> = (0..m * k).map(|i| ((i * 37 + 11) % 23) as f64 * 0.25 - 2.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i * 17 + 3) % 19) as f64 * 0.5 - 4.0).collect();
        let mut expect = vec![0.0f64; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..k {
                    acc += a[i * k + p] * b[p * n + j];
                }
                expect[i * n + j] = acc;
            }
        }
        let got = t64(&[m, k], &a).matmul(&t64(&[k, n], &b)).unwrap();
        for (g, e) in got.data().iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12, "{} vs {}", g, e);
        }
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = Tensor::<f32>::zeros(&[2, 3]);
        let b = Tensor::<f32>::zeros(&[4, 2]);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let a = t64(&[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let tt = a.transpose2().transpose2();
        assert_eq!(a, tt);
        assert_eq!(a.transpose2().shape(), &[3, 2]);
        assert_eq!(a.transpose2().data(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn reductions_accumulate() {
        let a = Tensor::<f32>::full(&[10, 10], 0.1);
        assert!((a.sum_f64() - 10.0).abs() < 1e-4);
        assert!((a.mean_f64() - 0.1).abs() < 1e-6);
    }
}
