//! Tape-based reverse-mode differentiation over dense [`Array`]s.
//!
//! Every operation appends one node holding its forward value; nodes are
//! therefore in topological order and [`Tape::backward`] is a single
//! reverse sweep. Nodes that do not depend on any parameter are skipped
//! during the sweep.

use super::array::{gemm_acc, gemm_nt_acc, gemm_tn_acc, Array};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Stride and padding for [`Tape::conv2d`]. Axis 0 (height) is padded
/// circularly, axis 1 (width) with zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub stride: (usize, usize),
    pub pad: (usize, usize),
}

impl Conv2dSpec {
    pub fn output_hw(&self, h: usize, w: usize, kh: usize, kw: usize) -> Option<(usize, usize)> {
        let hp = h + 2 * self.pad.0;
        let wp = w + 2 * self.pad.1;
        if hp < kh || wp < kw || self.stride.0 == 0 || self.stride.1 == 0 {
            return None;
        }
        Some(((hp - kh) / self.stride.0 + 1, (wp - kw) / self.stride.1 + 1))
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Array),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize, usize),
    Reshape(Var),
    LeakyRelu(Var, f64),
    Elu(Var),
    Exp(Var),
    Log(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Sum(Var),
    Mean(Var),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    SegmentSoftmax(Var, Vec<usize>, usize),
    MulRows(Var, Var),
    PickCols(Var, Vec<usize>),
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Var,
        spec: Conv2dSpec,
    },
}

#[derive(Debug)]
struct Node {
    value: Array,
    op: Op,
    needs_grad: bool,
}

/// Records a computation for later differentiation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Array> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn expect_2d(op: &'static str, a: &Array) -> Result<(usize, usize)> {
    match a.shape() {
        [r, c] => Ok((*r, *c)),
        s => Err(Error::shape(op, s, &[0, 0])),
    }
}

fn same_shape(op: &'static str, a: &Array, b: &Array) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, a.shape(), b.shape()));
    }
    Ok(())
}

/// Length of a per-row weight vector: `[E]` or `[E, 1]`.
fn row_vector_len(op: &'static str, w: &Array) -> Result<usize> {
    match w.shape() {
        [e] | [e, 1] => Ok(*e),
        s => Err(Error::shape(op, s, &[0, 1])),
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Array) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Array) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.0].value
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Array, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|&v| self.needs(v));
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = expect_2d("matmul", self.value(a))?;
        let (k2, m) = expect_2d("matmul", self.value(b))?;
        if k != k2 {
            return Err(Error::shape("matmul", self.value(a).shape(), self.value(b).shape()));
        }
        let mut out = vec![0.0; n * m];
        gemm_acc(self.value(a).data(), self.value(b).data(), &mut out, n, k, m);
        let value = Array::new(vec![n, m], out)?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Adds a bias row `[m]` (or `[1, m]`) to every row of `[n, m]`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (n, m) = expect_2d("add_bias", self.value(a))?;
        if self.value(bias).len() != m {
            return Err(Error::shape("add_bias", self.value(a).shape(), self.value(bias).shape()));
        }
        let b = self.value(bias).data();
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)).take(n) {
            for (o, bv) in row.iter_mut().zip(b) {
                *o += bv;
            }
        }
        let value = Array::new(vec![n, m], out)?;
        Ok(self.push(value, Op::AddBias(a, bias), &[a, bias]))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        same_shape(name, self.value(a), self.value(b))?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Array::new(self.value(a).shape().to_vec(), data)?;
        Ok(self.push(value, op, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale(a, c), &[a])
    }

    /// Elementwise product with a non-differentiable array.
    pub fn mul_const(&mut self, a: Var, c: Array) -> Result<Var> {
        same_shape("mul_const", self.value(a), &c)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(c.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Array::new(self.value(a).shape().to_vec(), data)?;
        Ok(self.push(value, Op::MulConst(a, c), &[a]))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::domain("concat_cols of zero arrays"))?;
        let (n, _) = expect_2d("concat_cols", self.value(first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = expect_2d("concat_cols", self.value(p))?;
            if r != n {
                return Err(Error::shape("concat_cols", self.value(first).shape(), self.value(p).shape()));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(n * total);
        for i in 0..n {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[i * w..(i + 1) * w]);
            }
        }
        let value = Array::new(vec![n, total], out)?;
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::domain("concat_rows of zero arrays"))?;
        let (_, m) = expect_2d("concat_rows", self.value(first))?;
        let mut rows = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (r, c) = expect_2d("concat_rows", self.value(p))?;
            if c != m {
                return Err(Error::shape("concat_rows", self.value(first).shape(), self.value(p).shape()));
            }
            rows += r;
            out.extend_from_slice(self.value(p).data());
        }
        let value = Array::new(vec![rows, m], out)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// Columns `start..end` of a 2-D array.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (n, m) = expect_2d("slice_cols", self.value(a))?;
        if start > end || end > m {
            return Err(Error::shape("slice_cols", self.value(a).shape(), &[start, end]));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(n * (end - start));
        for i in 0..n {
            out.extend_from_slice(&src[i * m + start..i * m + end]);
        }
        let value = Array::new(vec![n, end - start], out)?;
        Ok(self.push(value, Op::SliceCols(a, start, end), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).clone().reshaped(shape)?;
        Ok(self.push(value, Op::Reshape(a), &[a]))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(value, Op::LeakyRelu(a, slope), &[a])
    }

    pub fn elu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(elu);
        self.push(value, Op::Elu(a), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        self.push(value, Op::Exp(a), &[a])
    }

    pub fn log(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::ln);
        self.push(value, Op::Log(a), &[a])
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (_, m) = expect_2d("softmax_rows", self.value(a))?;
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)) {
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = (*v - mx).exp();
                z += *v;
            }
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        let value = Array::new(self.value(a).shape().to_vec(), out)?;
        Ok(self.push(value, Op::SoftmaxRows(a), &[a]))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (_, m) = expect_2d("log_softmax_rows", self.value(a))?;
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)) {
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        let value = Array::new(self.value(a).shape().to_vec(), out)?;
        Ok(self.push(value, Op::LogSoftmaxRows(a), &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Array::scalar(self.value(a).data().iter().sum());
        self.push(value, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let value = Array::scalar(self.value(a).data().iter().sum::<f64>() / n);
        self.push(value, Op::Mean(a), &[a])
    }

    /// Row `idx[e]` of `a` for every `e`.
    pub fn gather_rows(&mut self, a: Var, idx: Vec<usize>) -> Result<Var> {
        let (n, m) = expect_2d("gather_rows", self.value(a))?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::shape("gather_rows", self.value(a).shape(), &[bad]));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(idx.len() * m);
        for &i in &idx {
            out.extend_from_slice(&src[i * m..(i + 1) * m]);
        }
        let value = Array::new(vec![idx.len(), m], out)?;
        Ok(self.push(value, Op::GatherRows(a, idx), &[a]))
    }

    /// Sums row `e` of `a` into output row `idx[e]`; output has `n` rows.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Vec<usize>, n: usize) -> Result<Var> {
        let (e, m) = expect_2d("scatter_add_rows", self.value(a))?;
        if idx.len() != e {
            return Err(Error::shape("scatter_add_rows", self.value(a).shape(), &[idx.len()]));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::shape("scatter_add_rows", &[n], &[bad]));
        }
        let src = self.value(a).data();
        let mut out = vec![0.0; n * m];
        for (r, &i) in idx.iter().enumerate() {
            for (o, v) in out[i * m..(i + 1) * m].iter_mut().zip(&src[r * m..(r + 1) * m]) {
                *o += v;
            }
        }
        let value = Array::new(vec![n, m], out)?;
        Ok(self.push(value, Op::ScatterAddRows(a, idx), &[a]))
    }

    /// Softmax of a score vector within each segment `seg[e]`.
    pub fn segment_softmax(&mut self, a: Var, seg: Vec<usize>, n_seg: usize) -> Result<Var> {
        let e = row_vector_len("segment_softmax", self.value(a))?;
        if seg.len() != e {
            return Err(Error::shape("segment_softmax", self.value(a).shape(), &[seg.len()]));
        }
        if let Some(&bad) = seg.iter().find(|&&s| s >= n_seg) {
            return Err(Error::shape("segment_softmax", &[n_seg], &[bad]));
        }
        let x = self.value(a).data();
        let mut mx = vec![f64::NEG_INFINITY; n_seg];
        for (&s, &v) in seg.iter().zip(x) {
            mx[s] = mx[s].max(v);
        }
        let mut out: Vec<f64> = seg.iter().zip(x).map(|(&s, &v)| (v - mx[s]).exp()).collect();
        let mut z = vec![0.0; n_seg];
        for (&s, &v) in seg.iter().zip(&out) {
            z[s] += v;
        }
        for (&s, v) in seg.iter().zip(out.iter_mut()) {
            *v /= z[s];
        }
        let value = Array::new(self.value(a).shape().to_vec(), out)?;
        Ok(self.push(value, Op::SegmentSoftmax(a, seg, n_seg), &[a]))
    }

    /// Scales row `e` of `[E, m]` by `w[e]`.
    pub fn mul_rows(&mut self, a: Var, w: Var) -> Result<Var> {
        let (e, m) = expect_2d("mul_rows", self.value(a))?;
        if row_vector_len("mul_rows", self.value(w))? != e {
            return Err(Error::shape("mul_rows", self.value(a).shape(), self.value(w).shape()));
        }
        let wv = self.value(w).data();
        let mut out = self.value(a).data().to_vec();
        for (row, &s) in out.chunks_mut(m.max(1)).zip(wv) {
            for v in row {
                *v *= s;
            }
        }
        let value = Array::new(vec![e, m], out)?;
        Ok(self.push(value, Op::MulRows(a, w), &[a, w]))
    }

    /// `out[e] = a[e, idx[e]]`, shaped `[E, 1]`.
    pub fn pick_cols(&mut self, a: Var, idx: Vec<usize>) -> Result<Var> {
        let (e, m) = expect_2d("pick_cols", self.value(a))?;
        if idx.len() != e || idx.iter().any(|&c| c >= m) {
            return Err(Error::shape("pick_cols", self.value(a).shape(), &[idx.len()]));
        }
        let src = self.value(a).data();
        let out = idx.iter().enumerate().map(|(r, &c)| src[r * m + c]).collect();
        let value = Array::new(vec![e, 1], out)?;
        Ok(self.push(value, Op::PickCols(a, idx), &[a]))
    }

    /// Batched 2-D convolution. `input` is `[B, Cin, H, W]`, `kernel` is
    /// `[Cout, Cin, KH, KW]` and `bias` is `[Cout]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Var, spec: Conv2dSpec) -> Result<Var> {
        let (xs, ks) = (self.value(input).shape(), self.value(kernel).shape());
        let (&[b, ci, h, w], &[co, ci2, kh, kw]) = (xs, ks) else {
            return Err(Error::shape("conv2d", xs, ks));
        };
        if ci != ci2 || self.value(bias).len() != co {
            return Err(Error::shape("conv2d", xs, ks));
        }
        let (ho, wo) = spec
            .output_hw(h, w, kh, kw)
            .ok_or_else(|| Error::shape("conv2d", xs, ks))?;
        let x = self.value(input).data();
        let k = self.value(kernel).data();
        let bv = self.value(bias).data();
        let mut out = vec![0.0; b * co * ho * wo];
        for bi in 0..b {
            for o in 0..co {
                let obase = (bi * co + o) * ho * wo;
                for v in &mut out[obase..obase + ho * wo] {
                    *v = bv[o];
                }
                for c in 0..ci {
                    let xbase = (bi * ci + c) * h * w;
                    let kbase = (o * ci + c) * kh * kw;
                    for oh in 0..ho {
                        for dh in 0..kh {
                            let ih = (oh * spec.stride.0 + dh + h * spec.pad.0 - spec.pad.0) % h;
                            for ow in 0..wo {
                                let mut acc = 0.0;
                                for dw in 0..kw {
                                    let iw = ow * spec.stride.1 + dw;
                                    if iw < spec.pad.1 || iw - spec.pad.1 >= w {
                                        continue;
                                    }
                                    acc += k[kbase + dh * kw + dw] * x[xbase + ih * w + iw - spec.pad.1];
                                }
                                out[obase + oh * wo + ow] += acc;
                            }
                        }
                    }
                }
            }
        }
        let value = Array::new(vec![b, co, ho, wo], out)?;
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                kernel,
                bias,
                spec,
            },
            &[input, kernel, bias],
        ))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape("backward", self.value(loss).shape(), &[1]));
        }
        let mut grads: Vec<Option<Array>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array::full(self.value(loss).shape(), 1.0));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, g: &Array, grads: &mut [Option<Array>]) {
        let node = &self.nodes[idx];
        let out = &node.value;
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (n, k) = (self.value(*a).shape()[0], self.value(*a).shape()[1]);
                let m = self.value(*b).shape()[1];
                if self.needs(*a) {
                    let ga = self.slot(grads, *a);
                    gemm_nt_acc(gd, self.value(*b).data(), ga.data_mut(), n, k, m);
                }
                if self.needs(*b) {
                    let gb = self.slot(grads, *b);
                    gemm_tn_acc(self.value(*a).data(), gd, gb.data_mut(), n, k, m);
                }
            }
            Op::AddBias(a, bias) => {
                if self.needs(*a) {
                    self.slot(grads, *a).add_assign(g);
                }
                if self.needs(*bias) {
                    let m = out.cols();
                    let gb = self.slot(grads, *bias);
                    for row in gd.chunks(m.max(1)) {
                        for (acc, v) in gb.data_mut().iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.needs(v) {
                        self.slot(grads, v).add_assign(g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if self.needs(*a) {
                    self.slot(grads, *a).add_assign(g);
                }
                if self.needs(*b) {
                    for (acc, v) in self.slot(grads, *b).data_mut().iter_mut().zip(gd) {
                        *acc -= v;
                    }
                }
            }
            Op::Mul(a, b) => {
                for (this, other) in [(*a, *b), (*b, *a)] {
                    if self.needs(this) {
                        let od = self.value(other).data();
                        for ((acc, gv), ov) in self.slot(grads, this).data_mut().iter_mut().zip(gd).zip(od) {
                            *acc += gv * ov;
                        }
                    }
                }
            }
            Op::Scale(a, c) => {
                for (acc, gv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd) {
                    *acc += c * gv;
                }
            }
            Op::MulConst(a, c) => {
                for ((acc, gv), cv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd).zip(c.data()) {
                    *acc += gv * cv;
                }
            }
            Op::ConcatCols(parts) => {
                let n = out.rows();
                let total = out.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.needs(p) {
                        let gp = self.slot(grads, p).data_mut();
                        for i in 0..n {
                            for j in 0..w {
                                gp[i * w + j] += gd[i * total + offset + j];
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if self.needs(p) {
                        for (acc, v) in self.slot(grads, p).data_mut().iter_mut().zip(&gd[offset..offset + len]) {
                            *acc += v;
                        }
                    }
                    offset += len;
                }
            }
            Op::SliceCols(a, start, end) => {
                let m = self.value(*a).cols();
                let w = end - start;
                let ga = self.slot(grads, *a).data_mut();
                for (i, row) in gd.chunks(w.max(1)).enumerate().take(out.rows()) {
                    for (j, v) in row.iter().enumerate() {
                        ga[i * m + start + j] += v;
                    }
                }
            }
            Op::Reshape(a) => {
                for (acc, v) in self.slot(grads, *a).data_mut().iter_mut().zip(gd) {
                    *acc += v;
                }
            }
            Op::LeakyRelu(a, slope) => {
                let x = self.value(*a).data();
                for ((acc, gv), xv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd).zip(x) {
                    *acc += if *xv > 0.0 { *gv } else { slope * gv };
                }
            }
            Op::Elu(a) => {
                let x = self.value(*a).data();
                let y = out.data();
                for (((acc, gv), xv), yv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd).zip(x).zip(y) {
                    *acc += if *xv > 0.0 { *gv } else { gv * (yv + 1.0) };
                }
            }
            Op::Exp(a) => {
                for ((acc, gv), yv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd).zip(out.data()) {
                    *acc += gv * yv;
                }
            }
            Op::Log(a) => {
                let x = self.value(*a).data();
                for ((acc, gv), xv) in self.slot(grads, *a).data_mut().iter_mut().zip(gd).zip(x) {
                    *acc += gv / xv;
                }
            }
            Op::SoftmaxRows(a) => {
                let m = out.cols().max(1);
                let ga = self.slot(grads, *a).data_mut();
                for ((grow, yrow), arow) in gd.chunks(m).zip(out.data().chunks(m)).zip(ga.chunks_mut(m)) {
                    let dot: f64 = grow.iter().zip(yrow).map(|(g, y)| g * y).sum();
                    for ((acc, gv), yv) in arow.iter_mut().zip(grow).zip(yrow) {
                        *acc += yv * (gv - dot);
                    }
                }
            }
            Op::LogSoftmaxRows(a) => {
                let m = out.cols().max(1);
                let ga = self.slot(grads, *a).data_mut();
                for ((grow, yrow), arow) in gd.chunks(m).zip(out.data().chunks(m)).zip(ga.chunks_mut(m)) {
                    let gsum: f64 = grow.iter().sum();
                    for ((acc, gv), yv) in arow.iter_mut().zip(grow).zip(yrow) {
                        *acc += gv - yv.exp() * gsum;
                    }
                }
            }
            Op::Sum(a) => {
                let gv = gd[0];
                for acc in self.slot(grads, *a).data_mut() {
                    *acc += gv;
                }
            }
            Op::Mean(a) => {
                let gv = gd[0] / self.value(*a).len().max(1) as f64;
                for acc in self.slot(grads, *a).data_mut() {
                    *acc += gv;
                }
            }
            Op::GatherRows(a, idx) => {
                let m = out.cols();
                let ga = self.slot(grads, *a).data_mut();
                for (r, &i) in idx.iter().enumerate() {
                    for (acc, v) in ga[i * m..(i + 1) * m].iter_mut().zip(&gd[r * m..(r + 1) * m]) {
                        *acc += v;
                    }
                }
            }
            Op::ScatterAddRows(a, idx) => {
                let m = out.cols();
                let ga = self.slot(grads, *a).data_mut();
                for (r, &i) in idx.iter().enumerate() {
                    for (acc, v) in ga[r * m..(r + 1) * m].iter_mut().zip(&gd[i * m..(i + 1) * m]) {
                        *acc += v;
                    }
                }
            }
            Op::SegmentSoftmax(a, seg, n_seg) => {
                let y = out.data();
                let mut dot = vec![0.0; *n_seg];
                for ((&s, gv), yv) in seg.iter().zip(gd).zip(y) {
                    dot[s] += gv * yv;
                }
                let ga = self.slot(grads, *a).data_mut();
                for (((acc, &s), gv), yv) in ga.iter_mut().zip(seg).zip(gd).zip(y) {
                    *acc += yv * (gv - dot[s]);
                }
            }
            Op::MulRows(a, w) => {
                let m = out.cols().max(1);
                if self.needs(*a) {
                    let wv = self.value(*w).data();
                    let ga = self.slot(grads, *a).data_mut();
                    for ((arow, grow), &s) in ga.chunks_mut(m).zip(gd.chunks(m)).zip(wv) {
                        for (acc, gv) in arow.iter_mut().zip(grow) {
                            *acc += gv * s;
                        }
                    }
                }
                if self.needs(*w) {
                    let av = self.value(*a).data();
                    let gw = self.slot(grads, *w).data_mut();
                    for ((acc, grow), arow) in gw.iter_mut().zip(gd.chunks(m)).zip(av.chunks(m)) {
                        *acc += grow.iter().zip(arow).map(|(g, x)| g * x).sum::<f64>();
                    }
                }
            }
            Op::PickCols(a, idx) => {
                let m = self.value(*a).cols();
                let ga = self.slot(grads, *a).data_mut();
                for (r, &c) in idx.iter().enumerate() {
                    ga[r * m + c] += gd[r];
                }
            }
            Op::Conv2d {
                input,
                kernel,
                bias,
                spec,
            } => self.conv2d_backward(*input, *kernel, *bias, *spec, g, grads),
        }
    }

    fn conv2d_backward(
        &self,
        input: Var,
        kernel: Var,
        bias: Var,
        spec: Conv2dSpec,
        g: &Array,
        grads: &mut [Option<Array>],
    ) {
        let (b, ci, h, w) = {
            let s = self.value(input).shape();
            (s[0], s[1], s[2], s[3])
        };
        let (co, kh, kw) = {
            let s = self.value(kernel).shape();
            (s[0], s[2], s[3])
        };
        let (ho, wo) = (g.shape()[2], g.shape()[3]);
        let gd = g.data();
        let x = self.value(input).data();
        let k = self.value(kernel).data();
        let mut gx = self.needs(input).then(|| vec![0.0; x.len()]);
        let mut gk = self.needs(kernel).then(|| vec![0.0; k.len()]);
        if self.needs(bias) {
            let gb = self.slot(grads, bias).data_mut();
            for bi in 0..b {
                for o in 0..co {
                    let base = (bi * co + o) * ho * wo;
                    gb[o] += gd[base..base + ho * wo].iter().sum::<f64>();
                }
            }
        }
        for bi in 0..b {
            for o in 0..co {
                let obase = (bi * co + o) * ho * wo;
                for c in 0..ci {
                    let xbase = (bi * ci + c) * h * w;
                    let kbase = (o * ci + c) * kh * kw;
                    for oh in 0..ho {
                        for dh in 0..kh {
                            let ih = (oh * spec.stride.0 + dh + h * spec.pad.0 - spec.pad.0) % h;
                            for ow in 0..wo {
                                let gv = gd[obase + oh * wo + ow];
                                if gv == 0.0 {
                                    continue;
                                }
                                for dw in 0..kw {
                                    let iw = ow * spec.stride.1 + dw;
                                    if iw < spec.pad.1 || iw - spec.pad.1 >= w {
                                        continue;
                                    }
                                    let xi = xbase + ih * w + iw - spec.pad.1;
                                    let ki = kbase + dh * kw + dw;
                                    if let Some(gx) = gx.as_mut() {
                                        gx[xi] += gv * k[ki];
                                    }
                                    if let Some(gk) = gk.as_mut() {
                                        gk[ki] += gv * x[xi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(gx) = gx {
            for (acc, v) in self.slot(grads, input).data_mut().iter_mut().zip(&gx) {
                *acc += v;
            }
        }
        if let Some(gk) = gk {
            for (acc, v) in self.slot(grads, kernel).data_mut().iter_mut().zip(&gk) {
                *acc += v;
            }
        }
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Array>], v: Var) -> &'g mut Array {
        grads[v.0].get_or_insert_with(|| Array::zeros(self.value(v).shape()))
    }
}
