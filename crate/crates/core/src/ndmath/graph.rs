//! Dynamic tape for reverse-mode differentiation.
//!
//! A [`Graph`] is rebuilt for every forward pass. Parameters are borrowed from
//! a [`ParamStore`] rather than copied, and every op records the parents and
//! saved values its backward rule needs. [`Graph::backward`] walks the tape in
//! reverse creation order, which is a valid topological order because a node
//! can only reference nodes created before it.

use std::borrow::Cow;
use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::{
    log_sum_exp, matmul_a_bt_acc, matmul_at_b_acc, matmul_into, sigmoid, softmax_into, Real, Tensor,
};
use crate::error::{Error, Result};

/// Clamp applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add { a: Var, b: Var, broadcast: bool },
    Mul(Var, Var),
    Scale(Var, T),
    Concat { parts: Vec<Var>, axis: usize },
    Tanh(Var),
    Sigmoid(Var),
    Softmax { x: Var, axis: usize },
    Mean { x: Var, axis: usize },
    SumAll(Var),
    GatherRows { x: Var, idx: Vec<usize> },
    SliceCols { x: Var, start: usize },
    Transpose(Var),
    CrossEntropy { logits: Var, target: usize, probs: Vec<T> },
    Bce { p: Var, label: bool, active: bool },
}

struct Node<'a, T: Real> {
    value: Cow<'a, Tensor<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Gradients of a scalar loss keyed by parameter name.
pub type Gradients<T> = BTreeMap<String, Tensor<T>>;

pub struct Graph<'a, T: Real = f32> {
    nodes: Vec<Node<'a, T>>,
    params: Vec<(usize, &'a str)>,
}

impl<T: Real> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a, T: Real> Graph<'a, T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: Vec::new(),
        }
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

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    /// Borrow a trainable parameter as a leaf.
    pub fn param(&mut self, store: &'a ParamStore<T>, name: &str) -> Result<Var> {
        let (key, tensor) = store
            .entry(name)
            .ok_or_else(|| Error::UnknownParam(name.to_owned()))?;
        let idx = self.nodes.len();
        self.nodes.push(Node {
            value: Cow::Borrowed(tensor),
            op: Op::Leaf,
            needs_grad: true,
        });
        self.params.push((idx, key));
        Ok(Var(idx))
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa[1] != sb[0] {
            return Err(Error::Shape {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = Tensor::zeros([m, n]);
        matmul_into(self.value(a).data(), self.value(b).data(), m, k, n, out.data_mut());
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// Elementwise sum. `b` may also be a `1 x n` row broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let broadcast = if sa == sb {
            false
        } else if sb[0] == 1 && sb[1] == sa[1] {
            true
        } else {
            return Err(Error::Shape {
                op: "add",
                lhs: sa,
                rhs: sb,
            });
        };
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let n = sa[1];
        let data: Vec<T> = if broadcast {
            av.iter().enumerate().map(|(i, &x)| x + bv[i % n]).collect()
        } else {
            av.iter().zip(bv).map(|(&x, &y)| x + y).collect()
        };
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor::new(sa, data)?, Op::Add { a, b, broadcast }, ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::Shape {
                op: "mul",
                lhs: sa,
                rhs: sb,
            });
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor::new(sa, data)?, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Var {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| x * factor).collect();
        let out = Tensor::new(t.shape(), data).expect("same shape");
        let ng = self.ng(a);
        self.push(out, Op::Scale(a, factor), ng)
    }

    /// Concatenate along `axis` (0 stacks rows, 1 joins columns).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = *parts.first().ok_or(Error::EmptySequence("concat"))?;
        let s0 = self.shape(first);
        let keep = 1 - axis.min(1);
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if axis > 1 || s[keep] != s0[keep] {
                return Err(Error::Shape {
                    op: "concat",
                    lhs: s0,
                    rhs: s,
                });
            }
            total += s[axis];
        }
        let out = if axis == 0 {
            let mut data = Vec::with_capacity(total * s0[1]);
            for &p in parts {
                data.extend_from_slice(self.value(p).data());
            }
            Tensor::new([total, s0[1]], data)?
        } else {
            let rows = s0[0];
            let mut data = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row_slice(r));
                }
            }
            Tensor::new([rows, total], data)?
        };
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            ng,
        ))
    }

    fn map(&mut self, a: Var, f: impl Fn(T) -> T) -> Tensor<T> {
        let t = self.value(a);
        Tensor::new(t.shape(), t.data().iter().map(|&x| f(x)).collect()).expect("same shape")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.map(a, T::tanh);
        let ng = self.ng(a);
        self.push(out, Op::Tanh(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.map(a, sigmoid);
        let ng = self.ng(a);
        self.push(out, Op::Sigmoid(a), ng)
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let s = self.shape(x);
        if axis > 1 {
            return Err(Error::Shape {
                op: "softmax",
                lhs: s,
                rhs: [axis, 0],
            });
        }
        let mut out = Tensor::zeros(s);
        softmax_into(self.value(x).data(), s[0], s[1], axis, out.data_mut());
        let ng = self.ng(x);
        Ok(self.push(out, Op::Softmax { x, axis }, ng))
    }

    /// Mean along `axis`: 0 gives a `1 x cols` row, 1 gives a `rows x 1` column.
    pub fn mean(&mut self, x: Var, axis: usize) -> Result<Var> {
        let s = self.shape(x);
        if axis > 1 || s[axis] == 0 {
            return Err(Error::Shape {
                op: "mean",
                lhs: s,
                rhs: [axis, 0],
            });
        }
        let t = self.value(x);
        let out = if axis == 0 {
            let inv = T::one() / T::lit(s[0] as f64);
            let mut acc = vec![T::zero(); s[1]];
            for r in 0..s[0] {
                for (a, &v) in acc.iter_mut().zip(t.row_slice(r)) {
                    *a += v;
                }
            }
            Tensor::row(acc.into_iter().map(|a| a * inv).collect())
        } else {
            let inv = T::one() / T::lit(s[1] as f64);
            let data = (0..s[0])
                .map(|r| t.row_slice(r).iter().copied().sum::<T>() * inv)
                .collect();
            Tensor::new([s[0], 1], data)?
        };
        let ng = self.ng(x);
        Ok(self.push(out, Op::Mean { x, axis }, ng))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().copied().sum();
        let ng = self.ng(x);
        self.push(Tensor::scalar(total), Op::SumAll(x), ng)
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.value(x).len().max(1);
        let s = self.sum_all(x);
        self.scale(s, T::one() / T::lit(n as f64))
    }

    /// Rows of `x` selected by `idx`, in order; repeats allowed.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let t = self.value(x);
        let [rows, cols] = t.shape();
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            if i >= rows {
                return Err(Error::Index {
                    op: "gather_rows",
                    index: i,
                    len: rows,
                });
            }
            data.extend_from_slice(t.row_slice(i));
        }
        let out = Tensor::new([idx.len(), cols], data)?;
        let ng = self.ng(x);
        Ok(self.push(
            out,
            Op::GatherRows {
                x,
                idx: idx.to_vec(),
            },
            ng,
        ))
    }

    /// Token embeddings: rows of `table` for each id.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::EmptySequence("embedding_lookup"));
        }
        self.gather_rows(table, ids)
    }

    pub fn row(&mut self, x: Var, r: usize) -> Result<Var> {
        self.gather_rows(x, &[r])
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        let [rows, cols] = t.shape();
        if start + len > cols {
            return Err(Error::Index {
                op: "slice_cols",
                index: start + len,
                len: cols,
            });
        }
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&t.row_slice(r)[start..start + len]);
        }
        let out = Tensor::new([rows, len], data)?;
        let ng = self.ng(x);
        Ok(self.push(out, Op::SliceCols { x, start }, ng))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let [rows, cols] = t.shape();
        let out = Tensor::from_fn([cols, rows], |r, c| t.get(c, r));
        let ng = self.ng(x);
        self.push(out, Op::Transpose(x), ng)
    }

    /// `-log softmax(logits)[target]` over the flattened logits.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let x = self.value(logits).data();
        if target >= x.len() {
            return Err(Error::Index {
                op: "cross_entropy",
                index: target,
                len: x.len(),
            });
        }
        let lse = log_sum_exp(x);
        let probs = x.iter().map(|&v| (v - lse).exp()).collect();
        let loss = lse - x[target];
        let ng = self.ng(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
            ng,
        ))
    }

    /// Binary cross entropy of a `1 x 1` probability, clamped into `[eps, 1 - eps]`.
    pub fn binary_cross_entropy(&mut self, p: Var, label: bool) -> Result<Var> {
        let s = self.shape(p);
        if s != [1, 1] {
            return Err(Error::Shape {
                op: "binary_cross_entropy",
                lhs: s,
                rhs: [1, 1],
            });
        }
        let raw = self.value(p).item();
        let eps = T::lit(PROB_EPS);
        let lo = eps;
        let hi = T::one() - eps;
        let active = raw > lo && raw < hi;
        let loss = binary_cross_entropy(raw, label);
        let ng = self.ng(p);
        Ok(self.push(Tensor::scalar(loss), Op::Bce { p, label, active }, ng))
    }

    /// Reverse sweep from a scalar loss. Returns the gradient of every
    /// parameter leaf reachable from `loss`, summed over repeated uses.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let s = self.shape(loss);
        if s != [1, 1] {
            return Err(Error::NonScalarLoss(s));
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            if let Op::Leaf = node.op {
                grads[i] = Some(gy);
                continue;
            }
            self.backward_node(i, &gy, &mut grads);
        }

        let mut out = Gradients::new();
        for &(idx, name) in &self.params {
            if idx > loss.0 {
                continue;
            }
            if let Some(g) = &grads[idx] {
                let shape = self.nodes[idx].value.shape();
                match out.get_mut(name) {
                    Some(existing) => {
                        for (e, &v) in existing.data_mut().iter_mut().zip(g) {
                            *e += v;
                        }
                    }
                    None => {
                        out.insert(name.to_owned(), Tensor::new(shape, g.clone())?);
                    }
                }
            }
        }
        Ok(out)
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<T>>], v: Var) -> Option<&'g mut Vec<T>> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let len = self.nodes[v.0].value.len();
        Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); len]))
    }

    fn backward_node(&self, i: usize, gy: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        let y = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let [m, k] = self.shape(*a);
                let n = self.shape(*b)[1];
                if let Some(ga) = self.slot(grads, *a) {
                    matmul_a_bt_acc(gy, self.value(*b).data(), m, k, n, ga);
                }
                if let Some(gb) = self.slot(grads, *b) {
                    matmul_at_b_acc(self.value(*a).data(), gy, m, k, n, gb);
                }
            }
            Op::Add { a, b, broadcast } => {
                if let Some(ga) = self.slot(grads, *a) {
                    for (g, &d) in ga.iter_mut().zip(gy) {
                        *g += d;
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    if *broadcast {
                        let n = gb.len();
                        for (j, &d) in gy.iter().enumerate() {
                            gb[j % n] += d;
                        }
                    } else {
                        for (g, &d) in gb.iter_mut().zip(gy) {
                            *g += d;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for ((g, &d), &bv) in ga.iter_mut().zip(gy).zip(self.value(*b).data()) {
                        *g += d * bv;
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    for ((g, &d), &av) in gb.iter_mut().zip(gy).zip(self.value(*a).data()) {
                        *g += d * av;
                    }
                }
            }
            Op::Scale(a, factor) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for (g, &d) in ga.iter_mut().zip(gy) {
                        *g += d * *factor;
                    }
                }
            }
            Op::Concat { parts, axis } => {
                let out_cols = node.value.cols();
                let mut offset = 0;
                for &p in parts {
                    let [pr, pc] = self.shape(p);
                    if let Some(gp) = self.slot(grads, p) {
                        if *axis == 0 {
                            let start = offset * out_cols;
                            for (g, &d) in gp.iter_mut().zip(&gy[start..start + pr * pc]) {
                                *g += d;
                            }
                        } else {
                            for r in 0..pr {
                                let src = &gy[r * out_cols + offset..r * out_cols + offset + pc];
                                for (g, &d) in gp[r * pc..(r + 1) * pc].iter_mut().zip(src) {
                                    *g += d;
                                }
                            }
                        }
                    }
                    offset += if *axis == 0 { pr } else { pc };
                }
            }
            Op::Tanh(a) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for ((g, &d), &yv) in ga.iter_mut().zip(gy).zip(y) {
                        *g += d * (T::one() - yv * yv);
                    }
                }
            }
            Op::Sigmoid(a) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for ((g, &d), &yv) in ga.iter_mut().zip(gy).zip(y) {
                        *g += d * yv * (T::one() - yv);
                    }
                }
            }
            Op::Softmax { x, axis } => {
                let [rows, cols] = node.value.shape();
                if let Some(gx) = self.slot(grads, *x) {
                    let (outer, inner, so, si) = if *axis == 1 {
                        (rows, cols, cols, 1)
                    } else {
                        (cols, rows, 1, cols)
                    };
                    for o in 0..outer {
                        let base = o * so;
                        let mut dot = T::zero();
                        for k in 0..inner {
                            let j = base + k * si;
                            dot += gy[j] * y[j];
                        }
                        for k in 0..inner {
                            let j = base + k * si;
                            gx[j] += y[j] * (gy[j] - dot);
                        }
                    }
                }
            }
            Op::Mean { x, axis } => {
                let [rows, cols] = self.shape(*x);
                if let Some(gx) = self.slot(grads, *x) {
                    if *axis == 0 {
                        let inv = T::one() / T::lit(rows as f64);
                        for r in 0..rows {
                            for c in 0..cols {
                                gx[r * cols + c] += gy[c] * inv;
                            }
                        }
                    } else {
                        let inv = T::one() / T::lit(cols as f64);
                        for r in 0..rows {
                            for c in 0..cols {
                                gx[r * cols + c] += gy[r] * inv;
                            }
                        }
                    }
                }
            }
            Op::SumAll(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    for g in gx.iter_mut() {
                        *g += gy[0];
                    }
                }
            }
            Op::GatherRows { x, idx } => {
                let cols = self.shape(*x)[1];
                if let Some(gx) = self.slot(grads, *x) {
                    for (r, &src) in idx.iter().enumerate() {
                        let dst = &mut gx[src * cols..(src + 1) * cols];
                        for (g, &d) in dst.iter_mut().zip(&gy[r * cols..(r + 1) * cols]) {
                            *g += d;
                        }
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let cols = self.shape(*x)[1];
                let [rows, len] = node.value.shape();
                if let Some(gx) = self.slot(grads, *x) {
                    for r in 0..rows {
                        let dst = &mut gx[r * cols + start..r * cols + start + len];
                        for (g, &d) in dst.iter_mut().zip(&gy[r * len..(r + 1) * len]) {
                            *g += d;
                        }
                    }
                }
            }
            Op::Transpose(x) => {
                let [rows, cols] = self.shape(*x);
                if let Some(gx) = self.slot(grads, *x) {
                    for r in 0..rows {
                        for c in 0..cols {
                            gx[r * cols + c] += gy[c * rows + r];
                        }
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                target,
                probs,
            } => {
                if let Some(gx) = self.slot(grads, *logits) {
                    for (j, (g, &p)) in gx.iter_mut().zip(probs).enumerate() {
                        let onehot = if j == *target { T::one() } else { T::zero() };
                        *g += gy[0] * (p - onehot);
                    }
                }
            }
            Op::Bce { p, label, active } => {
                if !*active {
                    return;
                }
                let pv = self.value(*p).item();
                if let Some(gp) = self.slot(grads, *p) {
                    let d = if *label {
                        -T::one() / pv
                    } else {
                        T::one() / (T::one() - pv)
                    };
                    gp[0] += gy[0] * d;
                }
            }
        }
    }
}

/// Plain-value cross entropy, same log-sum-exp form as the graph op.
pub fn cross_entropy<T: Real>(logits: &[T], target: usize) -> Result<T> {
    if target >= logits.len() {
        return Err(Error::Index {
            op: "cross_entropy",
            index: target,
            len: logits.len(),
        });
    }
    Ok(log_sum_exp(logits) - logits[target])
}

/// `-[y log p + (1-y) log(1-p)]` with `p` clamped into `[1e-7, 1 - 1e-7]`.
pub fn binary_cross_entropy<T: Real>(p: T, label: bool) -> T {
    let eps = T::lit(PROB_EPS);
    let pc = p.max(eps).min(T::one() - eps);
    if label {
        -pc.ln()
    } else {
        -(T::one() - pc).ln()
    }
}
