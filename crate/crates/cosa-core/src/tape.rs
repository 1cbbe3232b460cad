//! Reverse-mode automatic differentiation on a flat tape.
//!
//! A [`Tape`] owns every intermediate tensor of one forward pass. Operations
//! append nodes and return lightweight [`Var`] handles; [`Tape::backward`]
//! walks the nodes in reverse creation order and accumulates gradients for
//! every node that (transitively) depends on a `requires_grad` leaf. Nodes
//! that do not need gradients are skipped entirely, so constants and
//! detached inputs cost nothing at backward time.
//!
//! The expected usage pattern is one tape per sample: parameters enter as
//! leaves, the loss comes out as a scalar node, and the caller reads the
//! leaf gradients off the tape before dropping it.

use crate::error::{CosaError, Result};
use crate::scalar::Scalar;
use crate::tensor::{mm_nn, mm_nn_acc, transpose_into, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Geometry of a 2-D convolution over channel-last token grids.
#[derive(Debug, Clone, Copy)]
pub struct ConvGeom {
    pub h: usize,
    pub w: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.pad - self.k) / self.stride + 1
    }
    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.pad - self.k) / self.stride + 1
    }
    fn patch_len(&self) -> usize {
        self.k * self.k * self.c_in
    }
}

enum Op<S> {
    Leaf,
    MatMul { a: Var, b: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Div { a: Var, b: Var },
    AddRow { a: Var, row: Var },
    Scale { a: Var, c: S },
    AddConst { a: Var },
    Exp { a: Var },
    Log { a: Var },
    Tanh { a: Var },
    Sigmoid { a: Var },
    Relu { a: Var },
    Sum { a: Var, axis: Option<usize> },
    Mean { a: Var, axis: Option<usize> },
    Softmax { a: Var, axis: usize },
    LayerNorm { a: Var, gamma: Var, beta: Var, xhat: Vec<S>, inv_std: Vec<S> },
    Transpose { a: Var },
    Reshape { a: Var },
    Conv2d { input: Var, weight: Var, bias: Var, geom: ConvGeom, patches: Vec<S> },
    GatherRows { a: Var, idx: Vec<usize> },
    ConcatRows { parts: Vec<Var> },
    ConcatCols { parts: Vec<Var> },
    SliceCols { a: Var, start: usize, len: usize },
    Upsample { a: Var, h: usize, w: usize, factor: usize },
    CrossEntropy { logits: Var, target: usize, soft: Vec<S> },
}

struct Node<S> {
    value: Tensor<S>,
    requires_grad: bool,
    needs: bool,
    op: Op<S>,
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    grads: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::with_capacity(256), grads: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` root w.r.t. `v`, if one was computed.
    pub fn grad(&self, v: Var) -> Option<&[S]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn leaf(&mut self, value: Tensor<S>, requires_grad: bool) -> Var {
        self.push(value, requires_grad, requires_grad, Op::Leaf)
    }

    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.leaf(value, false)
    }

    fn push(&mut self, value: Tensor<S>, requires_grad: bool, needs: bool, op: Op<S>) -> Var {
        self.nodes.push(Node { value, requires_grad, needs, op });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs
    }

    fn shape_err(&self, op: &'static str, vars: &[Var]) -> CosaError {
        let shapes: Vec<String> =
            vars.iter().map(|v| format!("{:?}", self.value(*v).shape())).collect();
        CosaError::Shape { op, detail: shapes.join(" x ") }
    }

    // ---- binary elementwise -------------------------------------------------

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(S, S) -> S,
        make: impl Fn(Var, Var) -> Op<S>,
    ) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(self.shape_err(op_name, &[a, b]));
        }
        let data: Vec<S> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let t = Tensor::new(self.value(a).shape().to_vec(), data).expect("same shape");
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(t, false, needs, make(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_same_shape("add", a, b, |x, y| x + y, |a, b| Op::Add { a, b })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_same_shape("sub", a, b, |x, y| x - y, |a, b| Op::Sub { a, b })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_same_shape("mul", a, b, |x, y| x * y, |a, b| Op::Mul { a, b })
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_same_shape("div", a, b, |x, y| x / y, |a, b| Op::Div { a, b })
    }

    /// Broadcast-add a row vector (shape `[n]` or `[1, n]`) to every row of a
    /// 2-D tensor.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if av.rank() != 2 || rv.numel() != av.cols() {
            return Err(self.shape_err("add_row", &[a, row]));
        }
        let n = av.cols();
        let mut data = av.data().to_vec();
        for r in data.chunks_exact_mut(n) {
            for (x, &y) in r.iter_mut().zip(rv.data()) {
                *x = *x + y;
            }
        }
        let t = Tensor::new(av.shape().to_vec(), data).expect("shape");
        let needs = self.needs(a) || self.needs(row);
        Ok(self.push(t, false, needs, Op::AddRow { a, row }))
    }

    // ---- unary --------------------------------------------------------------

    fn unary(
        &mut self,
        a: Var,
        f: impl Fn(S) -> S,
        make: impl Fn(Var) -> Op<S>,
    ) -> Var {
        let t = self.value(a).map(&f);
        let needs = self.needs(a);
        self.push(t, false, needs, make(a))
    }

    pub fn scale(&mut self, a: Var, c: S) -> Var {
        self.unary(a, |x| x * c, |a| Op::Scale { a, c })
    }

    pub fn add_const(&mut self, a: Var, c: S) -> Var {
        self.unary(a, |x| x + c, |a| Op::AddConst { a })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.exp(), |a| Op::Exp { a })
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.ln(), |a| Op::Log { a })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.tanh(), |a| Op::Tanh { a })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(
            a,
            |x| S::one() / (S::one() + (-x).exp()),
            |a| Op::Sigmoid { a },
        )
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > S::zero() { x } else { S::zero() }, |a| Op::Relu { a })
    }

    // ---- matmul / layout ----------------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows() {
            return Err(self.shape_err("matmul", &[a, b]));
        }
        let t = av.matmul(bv)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(t, false, needs, Op::MatMul { a, b }))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        if self.value(a).rank() != 2 {
            return Err(self.shape_err("transpose", &[a]));
        }
        let t = self.value(a).transpose2();
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::Transpose { a }))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).reshape(shape)?;
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::Reshape { a }))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 2 {
            return Err(self.shape_err("gather_rows", &[a]));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= av.rows()) {
            return Err(CosaError::Invalid {
                op: "gather_rows",
                detail: format!("row {} out of {}", bad, av.rows()),
            });
        }
        let c = av.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(av.row(i));
        }
        let t = Tensor::new(vec![idx.len(), c], data).expect("shape");
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::GatherRows { a, idx: idx.to_vec() }))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(CosaError::Invalid { op: "concat_rows", detail: "no parts".into() });
        }
        let c = self.value(parts[0]).cols();
        if parts.iter().any(|&p| self.value(p).rank() != 2 || self.value(p).cols() != c) {
            return Err(self.shape_err("concat_rows", parts));
        }
        let rows: usize = parts.iter().map(|&p| self.value(p).rows()).sum();
        let mut data = Vec::with_capacity(rows * c);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let t = Tensor::new(vec![rows, c], data).expect("shape");
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(t, false, needs, Op::ConcatRows { parts: parts.to_vec() }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(CosaError::Invalid { op: "concat_cols", detail: "no parts".into() });
        }
        let r = self.value(parts[0]).rows();
        if parts.iter().any(|&p| self.value(p).rank() != 2 || self.value(p).rows() != r) {
            return Err(self.shape_err("concat_cols", parts));
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = vec![S::zero(); r * cols];
        let mut off = 0;
        for &p in parts {
            let pv = self.value(p);
            let c = pv.cols();
            for i in 0..r {
                data[i * cols + off..i * cols + off + c].copy_from_slice(pv.row(i));
            }
            off += c;
        }
        let t = Tensor::new(vec![r, cols], data).expect("shape");
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(t, false, needs, Op::ConcatCols { parts: parts.to_vec() }))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 2 || start + len > av.cols() {
            return Err(self.shape_err("slice_cols", &[a]));
        }
        let r = av.rows();
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&av.row(i)[start..start + len]);
        }
        let t = Tensor::new(vec![r, len], data).expect("shape");
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::SliceCols { a, start, len }))
    }

    // ---- reductions ---------------------------------------------------------

    fn reduce(
        &mut self,
        op_name: &'static str,
        a: Var,
        axis: Option<usize>,
        mean: bool,
    ) -> Result<Var> {
        let av = self.value(a);
        let t = match axis {
            None => {
                let mut s = av.sum_f64();
                if mean && av.numel() > 0 {
                    s /= av.numel() as f64;
                }
                Tensor::scalar(S::from_f64(s))
            }
            Some(ax) => {
                if av.rank() != 2 || ax > 1 {
                    return Err(self.shape_err(op_name, &[a]));
                }
                let (m, n) = (av.rows(), av.cols());
                if ax == 0 {
                    let mut acc = vec![0.0f64; n];
                    for i in 0..m {
                        for (j, &v) in av.row(i).iter().enumerate() {
                            acc[j] += v.as_f64();
                        }
                    }
                    let div = if mean { m as f64 } else { 1.0 };
                    Tensor::new(vec![n], acc.iter().map(|&x| S::from_f64(x / div)).collect())
                        .expect("shape")
                } else {
                    let mut out = Vec::with_capacity(m);
                    let div = if mean { n as f64 } else { 1.0 };
                    for i in 0..m {
                        let s: f64 = av.row(i).iter().map(|x| x.as_f64()).sum();
                        out.push(S::from_f64(s / div));
                    }
                    Tensor::new(vec![m], out).expect("shape")
                }
            }
        };
        let needs = self.needs(a);
        let op = if mean { Op::Mean { a, axis } } else { Op::Sum { a, axis } };
        Ok(self.push(t, false, needs, op))
    }

    pub fn sum(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce("sum", a, axis, false)
    }

    pub fn mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce("mean", a, axis, true)
    }

    // ---- softmax / layer norm / losses ---------------------------------------

    /// Numerically stable softmax along `axis` of a 2-D tensor.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 2 || axis > 1 {
            return Err(self.shape_err("softmax", &[a]));
        }
        let (m, n) = (av.rows(), av.cols());
        let mut data = vec![S::zero(); m * n];
        if axis == 1 {
            for i in 0..m {
                softmax_slice(av.row(i), &mut data[i * n..(i + 1) * n]);
            }
        } else {
            let mut col = vec![S::zero(); m];
            let mut out = vec![S::zero(); m];
            for j in 0..n {
                for i in 0..m {
                    col[i] = av.data()[i * n + j];
                }
                softmax_slice(&col, &mut out);
                for i in 0..m {
                    data[i * n + j] = out[i];
                }
            }
        }
        let t = Tensor::new(vec![m, n], data).expect("shape");
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::Softmax { a, axis }))
    }

    /// Layer normalization over the last axis of a 2-D tensor, with learnable
    /// gain and shift. Statistics are accumulated in f64.
    pub fn layer_norm(&mut self, a: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 2
            || self.value(gamma).numel() != av.cols()
            || self.value(beta).numel() != av.cols()
        {
            return Err(self.shape_err("layer_norm", &[a, gamma, beta]));
        }
        let (m, n) = (av.rows(), av.cols());
        let mut xhat = vec![S::zero(); m * n];
        let mut inv_std = vec![S::zero(); m];
        let mut out = vec![S::zero(); m * n];
        let g = self.value(gamma).data().to_vec();
        let b = self.value(beta).data().to_vec();
        for i in 0..m {
            let row = av.row(i);
            let mu: f64 = row.iter().map(|x| x.as_f64()).sum::<f64>() / n as f64;
            let var: f64 =
                row.iter().map(|x| (x.as_f64() - mu).powi(2)).sum::<f64>() / n as f64;
            let istd = 1.0 / (var + eps).sqrt();
            inv_std[i] = S::from_f64(istd);
            for j in 0..n {
                let xh = S::from_f64((row[j].as_f64() - mu) * istd);
                xhat[i * n + j] = xh;
                out[i * n + j] = g[j] * xh + b[j];
            }
        }
        let t = Tensor::new(vec![m, n], out).expect("shape");
        let needs = self.needs(a) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(t, false, needs, Op::LayerNorm { a, gamma, beta, xhat, inv_std }))
    }

    /// Cross-entropy of a single logit row against an integer class target.
    /// Returns a scalar node.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let lv = self.value(logits);
        let c = lv.numel();
        let row_like = lv.rank() == 1 || (lv.rank() == 2 && lv.rows() == 1);
        if !row_like || target >= c {
            return Err(CosaError::Invalid {
                op: "cross_entropy",
                detail: format!("logits {:?}, target {}", lv.shape(), target),
            });
        }
        let mut soft = vec![S::zero(); c];
        softmax_slice(lv.data(), &mut soft);
        let mx = lv.data().iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.as_f64()));
        let lse: f64 =
            mx + lv.data().iter().map(|x| (x.as_f64() - mx).exp()).sum::<f64>().ln();
        let loss = lse - lv.data()[target].as_f64();
        let t = Tensor::scalar(S::from_f64(loss));
        let needs = self.needs(logits);
        Ok(self.push(t, false, needs, Op::CrossEntropy { logits, target, soft }))
    }

    // ---- convolution / resampling --------------------------------------------

    /// 2-D convolution over a channel-last token grid.
    ///
    /// `input` has shape `[h*w, c_in]` (row `y*w + x`), `weight` has shape
    /// `[k*k*c_in, c_out]`, `bias` has `c_out` elements. The output is
    /// `[out_h*out_w, c_out]`.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var, geom: ConvGeom) -> Result<Var> {
        let iv = self.value(input);
        let wv = self.value(weight);
        let bv = self.value(bias);
        if iv.shape() != [geom.h * geom.w, geom.c_in]
            || wv.shape() != [geom.patch_len(), geom.c_out]
            || bv.numel() != geom.c_out
        {
            return Err(self.shape_err("conv2d", &[input, weight, bias]));
        }
        let (oh, ow) = (geom.out_h(), geom.out_w());
        let patches = im2col(iv.data(), &geom);
        let mut out = vec![S::zero(); oh * ow * geom.c_out];
        mm_nn(&patches, wv.data(), &mut out, oh * ow, geom.patch_len(), geom.c_out);
        let bias_data = bv.data().to_vec();
        for row in out.chunks_exact_mut(geom.c_out) {
            for (o, &b) in row.iter_mut().zip(&bias_data) {
                *o = *o + b;
            }
        }
        let t = Tensor::new(vec![oh * ow, geom.c_out], out).expect("shape");
        let needs = self.needs(input) || self.needs(weight) || self.needs(bias);
        Ok(self.push(t, false, needs, Op::Conv2d { input, weight, bias, geom, patches }))
    }

    /// Bilinear upsampling of a channel-last `h x w` token grid by an integer
    /// factor (half-pixel centers, borders replicated).
    pub fn upsample(&mut self, a: Var, h: usize, w: usize, factor: usize) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 2 || av.rows() != h * w || factor == 0 {
            return Err(self.shape_err("upsample", &[a]));
        }
        if factor == 1 {
            let t = av.clone();
            let needs = self.needs(a);
            return Ok(self.push(t, false, needs, Op::Reshape { a }));
        }
        let c = av.cols();
        let (oh, ow) = (h * factor, w * factor);
        let ytab = bilinear_taps(h, factor);
        let xtab = bilinear_taps(w, factor);
        let mut out = vec![S::zero(); oh * ow * c];
        for yo in 0..oh {
            let (y0, y1, wy) = ytab[yo];
            for xo in 0..ow {
                let (x0, x1, wx) = xtab[xo];
                let orow = &mut out[(yo * ow + xo) * c..(yo * ow + xo + 1) * c];
                for (tap_y, fy) in [(y0, 1.0 - wy), (y1, wy)] {
                    for (tap_x, fx) in [(x0, 1.0 - wx), (x1, wx)] {
                        let wgt = S::from_f64(fy * fx);
                        let irow = av.row(tap_y * w + tap_x);
                        for (o, &v) in orow.iter_mut().zip(irow) {
                            *o = wgt.mul_add(v, *o);
                        }
                    }
                }
            }
        }
        let t = Tensor::new(vec![oh * ow, c], out).expect("shape");
        let needs = self.needs(a);
        Ok(self.push(t, false, needs, Op::Upsample { a, h, w, factor }))
    }

    // ---- backward -------------------------------------------------------------

    /// Backpropagate from a scalar root. Gradients are available through
    /// [`Tape::grad`] afterwards.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.value(root).numel() != 1 {
            return Err(CosaError::Invalid {
                op: "backward",
                detail: format!("root must be scalar, got {:?}", self.value(root).shape()),
            });
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[root.0] = Some(vec![S::one()]);

        let Tape { nodes, grads } = self;
        for i in (0..nodes.len()).rev() {
            if !nodes[i].needs {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            backward_node(nodes, grads, i, &gy);
            // Keep gradients observable on leaves and on any node a caller
            // may query (tests inspect interior nodes too).
            grads[i] = Some(gy);
        }
        Ok(())
    }
}

/// Numerically stable softmax of one slice into another.
fn softmax_slice<S: Scalar>(x: &[S], out: &mut [S]) {
    let mx = x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
    let mut denom = 0.0f64;
    for (o, &v) in out.iter_mut().zip(x) {
        let e = (v.as_f64() - mx).exp();
        *o = S::from_f64(e);
        denom += e;
    }
    let inv = S::from_f64(1.0 / denom);
    for o in out.iter_mut() {
        *o = *o * inv;
    }
}

/// Per-output-pixel source taps `(i0, i1, w)` for 1-D bilinear upsampling:
/// the output sample is `(1-w) * src[i0] + w * src[i1]`.
fn bilinear_taps(len: usize, factor: usize) -> Vec<(usize, usize, f64)> {
    let mut taps = Vec::with_capacity(len * factor);
    for o in 0..len * factor {
        let src = (o as f64 + 0.5) / factor as f64 - 0.5;
        let floor = src.floor();
        let frac = src - floor;
        let i0 = (floor.max(0.0) as usize).min(len - 1);
        let i1 = ((floor + 1.0).max(0.0) as usize).min(len - 1);
        taps.push((i0, i1, frac.clamp(0.0, 1.0)));
    }
    taps
}

fn im2col<S: Scalar>(input: &[S], g: &ConvGeom) -> Vec<S> {
    let (oh, ow, pl) = (g.out_h(), g.out_w(), g.patch_len());
    let mut patches = vec![S::zero(); oh * ow * pl];
    for oy in 0..oh {
        for ox in 0..ow {
            let base = (oy * ow + ox) * pl;
            for ky in 0..g.k {
                let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                if iy < 0 || iy >= g.h as isize {
                    continue;
                }
                for kx in 0..g.k {
                    let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                    if ix < 0 || ix >= g.w as isize {
                        continue;
                    }
                    let src = (iy as usize * g.w + ix as usize) * g.c_in;
                    let dst = base + (ky * g.k + kx) * g.c_in;
                    patches[dst..dst + g.c_in]
                        .copy_from_slice(&input[src..src + g.c_in]);
                }
            }
        }
    }
    patches
}

fn col2im_acc<S: Scalar>(d_patches: &[S], d_input: &mut [S], g: &ConvGeom) {
    let (oh, ow, pl) = (g.out_h(), g.out_w(), g.patch_len());
    for oy in 0..oh {
        for ox in 0..ow {
            let base = (oy * ow + ox) * pl;
            for ky in 0..g.k {
                let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                if iy < 0 || iy >= g.h as isize {
                    continue;
                }
                for kx in 0..g.k {
                    let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                    if ix < 0 || ix >= g.w as isize {
                        continue;
                    }
                    let dst = (iy as usize * g.w + ix as usize) * g.c_in;
                    let src = base + (ky * g.k + kx) * g.c_in;
                    for c in 0..g.c_in {
                        d_input[dst + c] = d_input[dst + c] + d_patches[src + c];
                    }
                }
            }
        }
    }
}

fn acc_grad<S: Scalar>(grads: &mut [Option<Vec<S>>], nodes: &[Node<S>], v: Var, add: &[S]) {
    if !nodes[v.0].needs {
        return;
    }
    let slot = grads[v.0].get_or_insert_with(|| vec![S::zero(); nodes[v.0].value.numel()]);
    for (g, &a) in slot.iter_mut().zip(add) {
        *g = *g + a;
    }
}

fn acc_grad_with<S: Scalar>(
    grads: &mut [Option<Vec<S>>],
    nodes: &[Node<S>],
    v: Var,
    f: impl FnOnce(&mut [S]),
) {
    if !nodes[v.0].needs {
        return;
    }
    let slot = grads[v.0].get_or_insert_with(|| vec![S::zero(); nodes[v.0].value.numel()]);
    f(slot);
}

#[allow(clippy::too_many_lines)]
fn backward_node<S: Scalar>(
    nodes: &[Node<S>],
    grads: &mut [Option<Vec<S>>],
    i: usize,
    gy: &[S],
) {
    match &nodes[i].op {
        Op::Leaf => {}
        Op::MatMul { a, b } => {
            let av = &nodes[a.0].value;
            let bv = &nodes[b.0].value;
            let (m, k, n) = (av.rows(), av.cols(), bv.cols());
            if nodes[a.0].needs {
                // dA += dC * B^T
                let mut bt = vec![S::zero(); k * n];
                transpose_into(bv.data(), &mut bt, k, n);
                acc_grad_with(grads, nodes, *a, |slot| {
                    mm_nn_acc(gy, &bt, slot, m, n, k);
                });
            }
            if nodes[b.0].needs {
                // dB += A^T * dC
                let mut at = vec![S::zero(); m * k];
                transpose_into(av.data(), &mut at, m, k);
                acc_grad_with(grads, nodes, *b, |slot| {
                    mm_nn_acc(&at, gy, slot, k, m, n);
                });
            }
        }
        Op::Add { a, b } => {
            acc_grad(grads, nodes, *a, gy);
            acc_grad(grads, nodes, *b, gy);
        }
        Op::Sub { a, b } => {
            acc_grad(grads, nodes, *a, gy);
            acc_grad_with(grads, nodes, *b, |slot| {
                for (g, &v) in slot.iter_mut().zip(gy) {
                    *g = *g - v;
                }
            });
        }
        Op::Mul { a, b } => {
            let av = nodes[a.0].value.data();
            let bv = nodes[b.0].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &v), &y) in slot.iter_mut().zip(bv).zip(gy) {
                    *g = y.mul_add(v, *g);
                }
            });
            acc_grad_with(grads, nodes, *b, |slot| {
                for ((g, &v), &y) in slot.iter_mut().zip(av).zip(gy) {
                    *g = y.mul_add(v, *g);
                }
            });
        }
        Op::Div { a, b } => {
            let av = nodes[a.0].value.data();
            let bv = nodes[b.0].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &den), &y) in slot.iter_mut().zip(bv).zip(gy) {
                    *g = *g + y / den;
                }
            });
            acc_grad_with(grads, nodes, *b, |slot| {
                for (j, g) in slot.iter_mut().enumerate() {
                    *g = *g - gy[j] * av[j] / (bv[j] * bv[j]);
                }
            });
        }
        Op::AddRow { a, row } => {
            acc_grad(grads, nodes, *a, gy);
            let n = nodes[row.0].value.numel();
            acc_grad_with(grads, nodes, *row, |slot| {
                for chunk in gy.chunks_exact(n) {
                    for (g, &v) in slot.iter_mut().zip(chunk) {
                        *g = *g + v;
                    }
                }
            });
        }
        Op::Scale { a, c } => {
            acc_grad_with(grads, nodes, *a, |slot| {
                for (g, &y) in slot.iter_mut().zip(gy) {
                    *g = y.mul_add(*c, *g);
                }
            });
        }
        Op::AddConst { a } => acc_grad(grads, nodes, *a, gy),
        Op::Exp { a } => {
            let out = nodes[i].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &o), &y) in slot.iter_mut().zip(out).zip(gy) {
                    *g = y.mul_add(o, *g);
                }
            });
        }
        Op::Log { a } => {
            let av = nodes[a.0].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &x), &y) in slot.iter_mut().zip(av).zip(gy) {
                    *g = *g + y / x;
                }
            });
        }
        Op::Tanh { a } => {
            let out = nodes[i].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &o), &y) in slot.iter_mut().zip(out).zip(gy) {
                    *g = *g + y * (S::one() - o * o);
                }
            });
        }
        Op::Sigmoid { a } => {
            let out = nodes[i].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &o), &y) in slot.iter_mut().zip(out).zip(gy) {
                    *g = *g + y * o * (S::one() - o);
                }
            });
        }
        Op::Relu { a } => {
            let av = nodes[a.0].value.data();
            acc_grad_with(grads, nodes, *a, |slot| {
                for ((g, &x), &y) in slot.iter_mut().zip(av).zip(gy) {
                    if x > S::zero() {
                        *g = *g + y;
                    }
                }
            });
        }
        Op::Sum { a, axis } | Op::Mean { a, axis } => {
            let mean = matches!(nodes[i].op, Op::Mean { .. });
            let av = &nodes[a.0].value;
            match axis {
                None => {
                    let scale = if mean {
                        S::from_f64(1.0 / av.numel() as f64)
                    } else {
                        S::one()
                    };
                    let g0 = gy[0] * scale;
                    acc_grad_with(grads, nodes, *a, |slot| {
                        for g in slot.iter_mut() {
                            *g = *g + g0;
                        }
                    });
                }
                Some(0) => {
                    let (m, n) = (av.rows(), av.cols());
                    let scale = if mean { S::from_f64(1.0 / m as f64) } else { S::one() };
                    acc_grad_with(grads, nodes, *a, |slot| {
                        for row in slot.chunks_exact_mut(n) {
                            for (g, &y) in row.iter_mut().zip(gy) {
                                *g = scale.mul_add(y, *g);
                            }
                        }
                    });
                }
                Some(_) => {
                    let (m, n) = (av.rows(), av.cols());
                    let scale = if mean { S::from_f64(1.0 / n as f64) } else { S::one() };
                    acc_grad_with(grads, nodes, *a, |slot| {
                        for ii in 0..m {
                            let g0 = gy[ii] * scale;
                            for g in slot[ii * n..(ii + 1) * n].iter_mut() {
                                *g = *g + g0;
                            }
                        }
                    });
                }
            }
        }
        Op::Softmax { a, axis } => {
            let out = &nodes[i].value;
            let (m, n) = (out.rows(), out.cols());
            let sv = out.data();
            if *axis == 1 {
                acc_grad_with(grads, nodes, *a, |slot| {
                    for ii in 0..m {
                        let s = &sv[ii * n..(ii + 1) * n];
                        let y = &gy[ii * n..(ii + 1) * n];
                        let dot: f64 =
                            s.iter().zip(y).map(|(&a, &b)| a.as_f64() * b.as_f64()).sum();
                        let dot = S::from_f64(dot);
                        for (g, (&si, &yi)) in
                            slot[ii * n..(ii + 1) * n].iter_mut().zip(s.iter().zip(y))
                        {
                            *g = *g + si * (yi - dot);
                        }
                    }
                });
            } else {
                acc_grad_with(grads, nodes, *a, |slot| {
                    for j in 0..n {
                        let mut dot = 0.0f64;
                        for ii in 0..m {
                            dot += sv[ii * n + j].as_f64() * gy[ii * n + j].as_f64();
                        }
                        let dot = S::from_f64(dot);
                        for ii in 0..m {
                            let idx = ii * n + j;
                            slot[idx] = slot[idx] + sv[idx] * (gy[idx] - dot);
                        }
                    }
                });
            }
        }
        Op::LayerNorm { a, gamma, beta, xhat, inv_std } => {
            let av = &nodes[a.0].value;
            let (m, n) = (av.rows(), av.cols());
            let gv = nodes[gamma.0].value.data();
            acc_grad_with(grads, nodes, *beta, |slot| {
                for row in gy.chunks_exact(n) {
                    for (g, &y) in slot.iter_mut().zip(row) {
                        *g = *g + y;
                    }
                }
            });
            acc_grad_with(grads, nodes, *gamma, |slot| {
                for ii in 0..m {
                    for j in 0..n {
                        let idx = ii * n + j;
                        slot[j] = slot[j] + gy[idx] * xhat[idx];
                    }
                }
            });
            acc_grad_with(grads, nodes, *a, |slot| {
                for ii in 0..m {
                    let mut m1 = 0.0f64;
                    let mut m2 = 0.0f64;
                    for j in 0..n {
                        let idx = ii * n + j;
                        let gdy = (gv[j] * gy[idx]).as_f64();
                        m1 += gdy;
                        m2 += gdy * xhat[idx].as_f64();
                    }
                    m1 /= n as f64;
                    m2 /= n as f64;
                    let istd = inv_std[ii];
                    for j in 0..n {
                        let idx = ii * n + j;
                        let gdy = (gv[j] * gy[idx]).as_f64();
                        let dx = (gdy - m1 - xhat[idx].as_f64() * m2) * istd.as_f64();
                        slot[idx] = slot[idx] + S::from_f64(dx);
                    }
                }
            });
        }
        Op::Transpose { a } => {
            let out = &nodes[i].value;
            let (r, c) = (out.rows(), out.cols());
            let mut gt = vec![S::zero(); r * c];
            transpose_into(gy, &mut gt, r, c);
            acc_grad(grads, nodes, *a, &gt);
        }
        Op::Reshape { a } => acc_grad(grads, nodes, *a, gy),
        Op::Conv2d { input, weight, bias, geom, patches } => {
            let (oh, ow) = (geom.out_h(), geom.out_w());
            let (pos, pl, co) = (oh * ow, geom.patch_len(), geom.c_out);
            acc_grad_with(grads, nodes, *bias, |slot| {
                for row in gy.chunks_exact(co) {
                    for (g, &y) in slot.iter_mut().zip(row) {
                        *g = *g + y;
                    }
                }
            });
            if nodes[weight.0].needs {
                // dW += patches^T * dOut
                let mut pt = vec![S::zero(); pos * pl];
                transpose_into(patches, &mut pt, pos, pl);
                acc_grad_with(grads, nodes, *weight, |slot| {
                    mm_nn_acc(&pt, gy, slot, pl, pos, co);
                });
            }
            if nodes[input.0].needs {
                // dPatches = dOut * W^T, then scatter back to the input grid.
                let wv = nodes[weight.0].value.data();
                let mut wt = vec![S::zero(); pl * co];
                transpose_into(wv, &mut wt, pl, co);
                let mut dp = vec![S::zero(); pos * pl];
                mm_nn(gy, &wt, &mut dp, pos, co, pl);
                acc_grad_with(grads, nodes, *input, |slot| {
                    col2im_acc(&dp, slot, geom);
                });
            }
        }
        Op::GatherRows { a, idx } => {
            let c = nodes[i].value.cols();
            acc_grad_with(grads, nodes, *a, |slot| {
                for (r, &src) in idx.iter().enumerate() {
                    let gr = &gy[r * c..(r + 1) * c];
                    for (g, &y) in slot[src * c..(src + 1) * c].iter_mut().zip(gr) {
                        *g = *g + y;
                    }
                }
            });
        }
        Op::ConcatRows { parts } => {
            let mut off = 0;
            for &p in parts {
                let numel = nodes[p.0].value.numel();
                acc_grad(grads, nodes, p, &gy[off..off + numel]);
                off += numel;
            }
        }
        Op::ConcatCols { parts } => {
            let out_cols = nodes[i].value.cols();
            let rows = nodes[i].value.rows();
            let mut off = 0;
            for &p in parts {
                let c = nodes[p.0].value.cols();
                acc_grad_with(grads, nodes, p, |slot| {
                    for r in 0..rows {
                        let src = &gy[r * out_cols + off..r * out_cols + off + c];
                        for (g, &y) in slot[r * c..(r + 1) * c].iter_mut().zip(src) {
                            *g = *g + y;
                        }
                    }
                });
                off += c;
            }
        }
        Op::SliceCols { a, start, len } => {
            let full = nodes[a.0].value.cols();
            let rows = nodes[i].value.rows();
            acc_grad_with(grads, nodes, *a, |slot| {
                for r in 0..rows {
                    let src = &gy[r * len..(r + 1) * len];
                    let dst = &mut slot[r * full + start..r * full + start + len];
                    for (g, &y) in dst.iter_mut().zip(src) {
                        *g = *g + y;
                    }
                }
            });
        }
        Op::Upsample { a, h, w, factor } => {
            let c = nodes[i].value.cols();
            let (oh, ow) = (h * factor, w * factor);
            let ytab = bilinear_taps(*h, *factor);
            let xtab = bilinear_taps(*w, *factor);
            acc_grad_with(grads, nodes, *a, |slot| {
                for yo in 0..oh {
                    let (y0, y1, wy) = ytab[yo];
                    for xo in 0..ow {
                        let (x0, x1, wx) = xtab[xo];
                        let grow = &gy[(yo * ow + xo) * c..(yo * ow + xo + 1) * c];
                        for (tap_y, fy) in [(y0, 1.0 - wy), (y1, wy)] {
                            for (tap_x, fx) in [(x0, 1.0 - wx), (x1, wx)] {
                                let wgt = S::from_f64(fy * fx);
                                let dst = &mut slot
                                    [(tap_y * w + tap_x) * c..(tap_y * w + tap_x + 1) * c];
                                for (g, &y) in dst.iter_mut().zip(grow) {
                                    *g = wgt.mul_add(y, *g);
                                }
                            }
                        }
                    }
                }
            });
        }
        Op::CrossEntropy { logits, target, soft } => {
            let g0 = gy[0];
            let tgt = *target;
            acc_grad_with(grads, nodes, *logits, |slot| {
                for (j, (g, &s)) in slot.iter_mut().zip(soft).enumerate() {
                    let onehot = if j == tgt { S::one() } else { S::zero() };
                    *g = g0.mul_add(s - onehot, *g);
                }
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences on an arbitrary graph builder: the oracle
    /// all gradient rules are checked against.
    fn fd_check(
        shapes: &[Vec<usize>],
        seed: u64,
        build: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
        tol: f64,
    ) {
        use crate::rng;
        let inits: Vec<Tensor<f64>> = shapes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let n = s.iter().product();
                Tensor::new(
                    s.clone(),
                    rng::randn_vec(&mut rng::stream(seed, "fd", i as u64), n, 0.6),
                )
                .unwrap()
            })
            .collect();

        let mut tape = Tape::new();
        let vars: Vec<Var> = inits.iter().map(|t| tape.leaf(t.clone(), true)).collect();
        let root = build(&mut tape, &vars);
        assert_eq!(tape.value(root).numel(), 1, "root must be scalar");
        tape.backward(root).unwrap();
        let analytic: Vec<Vec<f64>> =
            vars.iter().map(|&v| tape.grad(v).unwrap_or(&[]).to_vec()).collect();

        let eval = |perturbed: &[Tensor<f64>]| -> f64 {
            let mut t = Tape::new();
            let vs: Vec<Var> = perturbed.iter().map(|x| t.leaf(x.clone(), true)).collect();
            let r = build(&mut t, &vs);
            t.value(r).data()[0]
        };

        let h = 1e-5;
        for (pi, init) in inits.iter().enumerate() {
            for e in 0..init.numel() {
                let mut plus = inits.clone();
                plus[pi].data_mut()[e] += h;
                let mut minus = inits.clone();
                minus[pi].data_mut()[e] -= h;
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let an = analytic[pi][e];
                let denom = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    (fd - an).abs() / denom < tol,
                    "param {} elem {}: fd {} vs analytic {}",
                    pi,
                    e,
                    fd,
                    an
                );
            }
        }
    }

    #[test]
    fn grad_matmul_chain() {
        fd_check(
            &[vec![3, 4], vec![4, 5], vec![5]],
            11,
            |t, v| {
                let mm = t.matmul(v[0], v[1]).unwrap();
                let biased = t.add_row(mm, v[2]).unwrap();
                let act = t.tanh(biased);
                t.mean(act, None).unwrap()
            },
            1e-5,
        );
    }

    #[test]
    fn grad_elementwise_ops() {
        fd_check(
            &[vec![2, 3], vec![2, 3]],
            12,
            |t, v| {
                let s = t.sigmoid(v[0]);
                let e = t.exp(v[1]);
                let m = t.mul(s, e).unwrap();
                let d = t.div(m, e).unwrap();
                let sc = t.scale(d, 0.7);
                let su = t.sub(sc, v[0]).unwrap();
                let shifted = t.add_const(su, 2.0);
                let l = t.log(shifted);
                t.sum(l, None).unwrap()
            },
            1e-5,
        );
    }

    #[test]
    fn grad_softmax_both_axes() {
        fd_check(
            &[vec![4, 3]],
            13,
            |t, v| {
                let s1 = t.softmax(v[0], 1).unwrap();
                let s0 = t.softmax(v[0], 0).unwrap();
                let m = t.mul(s1, s0).unwrap();
                let lg = t.add_const(m, 0.3);
                let l = t.log(lg);
                t.sum(l, None).unwrap()
            },
            1e-5,
        );
    }

    #[test]
    fn grad_layer_norm() {
        fd_check(
            &[vec![3, 5], vec![5], vec![5]],
            14,
            |t, v| {
                let ln = t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap();
                let a = t.tanh(ln);
                t.mean(a, None).unwrap()
            },
            1e-4,
        );
    }

    #[test]
    fn grad_reductions_axes() {
        fd_check(
            &[vec![3, 4]],
            15,
            |t, v| {
                let s0 = t.sum(v[0], Some(0)).unwrap();
                let m1 = t.mean(v[0], Some(1)).unwrap();
                let s0r = t.reshape(s0, &[1, 4]).unwrap();
                let m1r = t.reshape(m1, &[3, 1]).unwrap();
                let outer = t.matmul(m1r, s0r).unwrap();
                let sq = t.mul(outer, outer).unwrap();
                t.mean(sq, None).unwrap()
            },
            1e-5,
        );
    }

    #[test]
    fn grad_conv_and_upsample() {
        let geom = ConvGeom { h: 5, w: 5, c_in: 2, c_out: 3, k: 3, stride: 2, pad: 1 };
        fd_check(
            &[vec![25, 2], vec![18, 3], vec![3]],
            16,
            move |t, v| {
                let c = t.conv2d(v[0], v[1], v[2], geom).unwrap();
                let r = t.relu(c);
                let u = t.upsample(r, 3, 3, 2).unwrap();
                let sq = t.mul(u, u).unwrap();
                t.mean(sq, None).unwrap()
            },
            1e-4,
        );
    }

    #[test]
    fn grad_gather_concat_slice() {
        fd_check(
            &[vec![4, 3], vec![2, 3]],
            17,
            |t, v| {
                // Repeated rows exercise gradient accumulation in the scatter.
                let g = t.gather_rows(v[0], &[1, 1, 3]).unwrap();
                let cr = t.concat_rows(&[g, v[1]]).unwrap();
                let cc = t.concat_cols(&[cr, cr]).unwrap();
                let s = t.slice_cols(cc, 2, 3).unwrap();
                let sq = t.mul(s, s).unwrap();
                t.sum(sq, None).unwrap()
            },
            1e-5,
        );
    }

    #[test]
    fn grad_cross_entropy_matches_softmax_minus_onehot() {
        let mut tape = Tape::<f64>::new();
        let logits =
            tape.leaf(Tensor::new(vec![1, 4], vec![0.2, -1.0, 2.5, 0.0]).unwrap(), true);
        let loss = tape.cross_entropy(logits, 2).unwrap();
        tape.backward(loss).unwrap();
        let g = tape.grad(logits).unwrap().to_vec();
        let sm = {
            let v = [0.2f64, -1.0, 2.5, 0.0];
            let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ex: Vec<f64> = v.iter().map(|x| (x - mx).exp()).collect();
            let s: f64 = ex.iter().sum();
            ex.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        for j in 0..4 {
            let expect = sm[j] - if j == 2 { 1.0 } else { 0.0 };
            assert!((g[j] - expect).abs() < 1e-12);
        }
        fd_check(
            &[vec![1, 5]],
            18,
            |t, v| t.cross_entropy(v[0], 3).unwrap(),
            1e-5,
        );
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::full(&[2, 2], 1.5), true);
        let c = tape.constant(Tensor::full(&[2, 2], 2.0));
        let m = tape.mul(a, c).unwrap();
        let s = tape.sum(m, None).unwrap();
        tape.backward(s).unwrap();
        assert!(tape.grad(c).is_none());
        assert_eq!(tape.grad(a).unwrap(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn gradient_accumulates_over_reuse() {
        // y = sum(a) + sum(a) must give da = 2.
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::full(&[3], 0.5), true);
        let s1 = tape.sum(a, None).unwrap();
        let s2 = tape.sum(a, None).unwrap();
        let y = tape.add(s1, s2).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(a).unwrap(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::full(&[2, 2], 1.0), true);
        assert!(tape.backward(a).is_err());
    }

    #[test]
    fn upsample_preserves_constant_fields() {
        // Border replication keeps a constant grid exactly constant.
        let mut tape = Tape::<f32>::new();
        let a = tape.constant(Tensor::full(&[9, 2], 0.75));
        let u = tape.upsample(a, 3, 3, 2).unwrap();
        assert_eq!(tape.value(u).shape(), &[36, 2]);
        for &v in tape.value(u).data() {
            assert!((v - 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn conv_identity_kernel_is_identity() {
        // 1x1 kernel with identity weights reproduces the input channels.
        let geom = ConvGeom { h: 2, w: 2, c_in: 2, c_out: 2, k: 1, stride: 1, pad: 0 };
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(
            Tensor::new(vec![4, 2], (0..8).map(|i| i as f32).collect()).unwrap(),
        );
        let w = tape.constant(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let b = tape.constant(Tensor::zeros(&[2]));
        let y = tape.conv2d(x, w, b, geom).unwrap();
        assert_eq!(tape.value(y).data(), tape.value(x).data());
    }
}
