//! Reverse-mode gradient tape over [`NdArray`] values.
//!
//! Every primitive application appends one node holding its forward value,
//! so node order is a topological order by construction. [`Tape::backward`]
//! walks the nodes in reverse, applying each primitive's adjoint rule.

use std::cell::RefCell;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{conv, scan, GatherMap, NdArray, Real};

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Affine { x: usize, scale: T },
    Exp(usize),
    Log(usize),
    Sigmoid(usize),
    LogSigmoid(usize),
    LeakyRelu { x: usize, slope: T },
    Clamp { x: usize, lo: T, hi: T },
    Sum(usize),
    SumAxis { x: usize, axis: usize },
    Select { x: usize, axis: usize, index: usize },
    Slice0 { x: usize, start: usize },
    Concat0(Vec<usize>),
    Reshape(usize),
    CumSum { x: usize, axis: usize },
    CumProd { x: usize, axis: usize, exclusive: bool },
    Dense { x: usize, w: usize, b: usize },
    Conv2d { x: usize, w: usize, b: usize, stride: usize, pad: usize },
    ConvTranspose3d { x: usize, w: usize, b: usize, stride: usize, pad: usize },
    Gather { x: usize, map: Arc<GatherMap<T>> },
}

impl<T> Op<T> {
    fn inputs(&self) -> Vec<usize> {
        use Op::*;
        match self {
            Leaf | Constant => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) => vec![*a, *b],
            Affine { x, .. }
            | LeakyRelu { x, .. }
            | Clamp { x, .. }
            | SumAxis { x, .. }
            | Select { x, .. }
            | Slice0 { x, .. }
            | CumSum { x, .. }
            | CumProd { x, .. }
            | Gather { x, .. } => vec![*x],
            Exp(x) | Log(x) | Sigmoid(x) | LogSigmoid(x) | Sum(x) | Reshape(x) => vec![*x],
            Concat0(xs) => xs.clone(),
            Dense { x, w, b } | Conv2d { x, w, b, .. } | ConvTranspose3d { x, w, b, .. } => {
                vec![*x, *w, *b]
            }
        }
    }
}

#[derive(Debug)]
struct Node<T> {
    value: Arc<NdArray<T>>,
    op: Op<T>,
    /// Depends on at least one leaf; constant subgraphs never get adjoints.
    active: bool,
}

/// Append-only record of primitive applications.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    index: usize,
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: NdArray<T>, op: Op<T>) -> Var<'_, T> {
        self.push_shared(Arc::new(value), op)
    }

    fn push_shared(&self, value: Arc<NdArray<T>>, op: Op<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        let active = match &op {
            Op::Leaf => true,
            Op::Constant => false,
            other => other.inputs().iter().any(|&i| nodes[i].active),
        };
        nodes.push(Node { value, op, active });
        Var {
            tape: self,
            index: nodes.len() - 1,
        }
    }

    /// A differentiable input.
    pub fn leaf(&self, value: NdArray<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf)
    }

    /// A differentiable input sharing storage with the caller.
    pub fn leaf_shared(&self, value: Arc<NdArray<T>>) -> Var<'_, T> {
        self.push_shared(value, Op::Leaf)
    }

    /// A value that never receives an adjoint.
    pub fn constant(&self, value: NdArray<T>) -> Var<'_, T> {
        self.push(value, Op::Constant)
    }

    fn value_of(&self, index: usize) -> Arc<NdArray<T>> {
        Arc::clone(&self.nodes.borrow()[index].value)
    }

    /// Reverse sweep from a scalar `loss`, computing adjoints for every node
    /// that depends on a leaf.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        self.sweep(loss, None)
    }

    /// Reverse sweep restricted to paths that reach one of `wrt`.
    ///
    /// Adjoints of nodes off those paths are left unset, which skips e.g. the
    /// generator half of the graph when only discriminator gradients are
    /// needed.
    pub fn backward_wrt(&self, loss: Var<'_, T>, wrt: &[Var<'_, T>]) -> Result<Gradients<T>> {
        let ids: Vec<usize> = wrt.iter().map(|v| v.index).collect();
        self.sweep(loss, Some(&ids))
    }

    fn sweep(&self, loss: Var<'_, T>, wrt: Option<&[usize]>) -> Result<Gradients<T>> {
        assert!(std::ptr::eq(loss.tape, self), "loss belongs to another tape");
        let nodes = self.nodes.borrow();
        let seed_node = &nodes[loss.index];
        if !seed_node.value.is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got dims {:?}",
                seed_node.value.dims()
            )));
        }
        let relevant: Vec<bool> = match wrt {
            None => nodes.iter().map(|n| n.active).collect(),
            Some(ids) => {
                let mut rel = vec![false; nodes.len()];
                for i in 0..nodes.len() {
                    rel[i] = ids.contains(&i)
                        || (nodes[i].active && nodes[i].op.inputs().iter().any(|&j| rel[j]));
                }
                rel
            }
        };
        let mut adj: Vec<Option<NdArray<T>>> = vec![None; nodes.len()];
        if relevant[loss.index] {
            adj[loss.index] = Some(NdArray::full(seed_node.value.dims(), T::one()));
        }
        for i in (0..=loss.index).rev() {
            let Some(g) = adj[i].take() else { continue };
            propagate(&nodes, i, &g, &relevant, &mut adj);
            adj[i] = Some(g);
        }
        Ok(Gradients { adjoints: adj })
    }
}

fn accumulate<T: Real>(adj: &mut [Option<NdArray<T>>], i: usize, g: NdArray<T>) {
    match &mut adj[i] {
        Some(a) => a.add_assign(&g),
        slot => *slot = Some(g),
    }
}

fn propagate<T: Real>(
    nodes: &[Node<T>],
    i: usize,
    g: &NdArray<T>,
    relevant: &[bool],
    adj: &mut [Option<NdArray<T>>],
) {
    let val = |j: usize| &*nodes[j].value;
    let y = &*nodes[i].value;
    let mut send = |j: usize, d: NdArray<T>| {
        if relevant[j] {
            accumulate(adj, j, d);
        }
    };
    match &nodes[i].op {
        Op::Leaf | Op::Constant => {}
        Op::Add(a, b) => {
            send(*a, g.clone());
            send(*b, g.clone());
        }
        Op::Sub(a, b) => {
            send(*a, g.clone());
            send(*b, g.map(|v| -v));
        }
        Op::Mul(a, b) => {
            send(*a, g.zip_map(val(*b), |g, b| g * b));
            send(*b, g.zip_map(val(*a), |g, a| g * a));
        }
        Op::Affine { x, scale } => send(*x, g.scale(*scale)),
        Op::Exp(x) => send(*x, g.zip_map(y, |g, y| g * y)),
        Op::Log(x) => send(*x, g.zip_map(val(*x), |g, x| g / x)),
        Op::Sigmoid(x) => send(*x, g.zip_map(y, |g, y| g * y * (T::one() - y))),
        Op::LogSigmoid(x) => send(*x, g.zip_map(val(*x), |g, x| g * sigmoid(-x))),
        Op::LeakyRelu { x, slope } => send(
            *x,
            g.zip_map(val(*x), |g, x| if x > T::zero() { g } else { g * *slope }),
        ),
        Op::Clamp { x, lo, hi } => send(
            *x,
            g.zip_map(val(*x), |g, x| if x >= *lo && x <= *hi { g } else { T::zero() }),
        ),
        Op::Sum(x) => send(*x, NdArray::full(val(*x).dims(), g.item())),
        Op::SumAxis { x, axis } => {
            let xd = val(*x).dims();
            let (outer, n, inner) = super::array::axis_split(xd, *axis);
            let gs = g.as_slice();
            let mut d = Vec::with_capacity(outer * n * inner);
            for o in 0..outer {
                for _ in 0..n {
                    d.extend_from_slice(&gs[o * inner..(o + 1) * inner]);
                }
            }
            send(*x, NdArray::from_vec(xd, d));
        }
        Op::Select { x, axis, index } => {
            let xd = val(*x).dims();
            let (outer, n, inner) = super::array::axis_split(xd, *axis);
            let mut d = NdArray::zeros(xd);
            let ds = d.as_mut_slice();
            for o in 0..outer {
                let at = (o * n + index) * inner;
                ds[at..at + inner].copy_from_slice(&g.as_slice()[o * inner..(o + 1) * inner]);
            }
            send(*x, d);
        }
        Op::Slice0 { x, start } => {
            let xv = val(*x);
            let row: usize = xv.dims()[1..].iter().product();
            let mut d = NdArray::zeros(xv.dims());
            d.as_mut_slice()[start * row..start * row + g.len()].copy_from_slice(g.as_slice());
            send(*x, d);
        }
        Op::Concat0(xs) => {
            let mut at = 0;
            for &j in xs {
                let xv = val(j);
                let part = g.as_slice()[at..at + xv.len()].to_vec();
                at += xv.len();
                send(j, NdArray::from_vec(xv.dims(), part));
            }
        }
        Op::Reshape(x) => send(*x, NdArray::from_vec(val(*x).dims(), g.as_slice().to_vec())),
        Op::CumSum { x, axis } => send(*x, scan::cumsum_backward(g, *axis)),
        Op::CumProd { x, axis, exclusive } => {
            send(*x, scan::cumprod_backward(val(*x), g, *axis, *exclusive))
        }
        Op::Dense { x, w, b } => {
            let (xv, wv) = (val(*x), val(*w));
            let (out, inp) = (wv.dims()[0], wv.dims()[1]);
            if relevant[*x] {
                let mut dx = vec![T::zero(); inp];
                super::real::matmul(1, out, inp, g.as_slice(), false, wv.as_slice(), false, T::zero(), &mut dx);
                send(*x, NdArray::from_vec(xv.dims(), dx));
            }
            if relevant[*w] {
                let mut dw = vec![T::zero(); out * inp];
                super::real::matmul(out, 1, inp, g.as_slice(), false, xv.as_slice(), false, T::zero(), &mut dw);
                send(*w, NdArray::from_vec(wv.dims(), dw));
            }
            send(*b, g.clone());
        }
        Op::Conv2d { x, w, b, stride, pad } => {
            let (dx, dw, db) = conv::conv2d_backward(val(*x), val(*w), g, *stride, *pad);
            send(*x, dx);
            send(*w, dw);
            send(*b, db);
        }
        Op::ConvTranspose3d { x, w, b, stride, pad } => {
            let (dx, dw, db) = conv::conv_transpose3d_backward(val(*x), val(*w), g, *stride, *pad);
            send(*x, dx);
            send(*w, dw);
            send(*b, db);
        }
        Op::Gather { x, map } => send(*x, map.adjoint(g, val(*x).dims())),
    }
}

pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log(sigmoid(x))` without overflow for large `|x|`.
pub(crate) fn log_sigmoid<T: Real>(x: T) -> T {
    // log sigmoid(x) = min(x, 0) - log(1 + exp(-|x|))
    x.min(T::zero()) - (-x.abs()).exp().ln_1p()
}

/// Adjoints produced by a reverse sweep.
#[derive(Debug)]
pub struct Gradients<T> {
    adjoints: Vec<Option<NdArray<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, var: Var<'_, T>) -> Option<&NdArray<T>> {
        self.adjoints[var.index].as_ref()
    }

    /// The adjoint of `var`, or zeros when the loss does not depend on it.
    pub fn wrt(&self, var: Var<'_, T>) -> NdArray<T> {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| NdArray::zeros(var.value().dims()))
    }
}

impl<'t, T: Real> Var<'t, T> {
    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Arc<NdArray<T>> {
        self.tape.value_of(self.index)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.value().dims().to_vec()
    }

    fn same_tape(&self, other: &Self) {
        assert!(std::ptr::eq(self.tape, other.tape), "vars from different tapes");
    }

    fn unary(&self, op: Op<T>, f: impl Fn(T) -> T) -> Self {
        let v = self.value().map(f);
        self.tape.push(v, op)
    }

    fn binary(&self, other: &Self, op: Op<T>, f: impl Fn(T, T) -> T) -> Self {
        self.same_tape(other);
        let v = self.value().zip_map(&other.value(), f);
        self.tape.push(v, op)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.binary(other, Op::Add(self.index, other.index), |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.binary(other, Op::Sub(self.index, other.index), |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.binary(other, Op::Mul(self.index, other.index), |a, b| a * b)
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&self, scale: T, shift: T) -> Self {
        self.unary(Op::Affine { x: self.index, scale }, |x| scale * x + shift)
    }

    pub fn scale(&self, s: T) -> Self {
        self.affine(s, T::zero())
    }

    /// `1 - x`
    pub fn one_minus(&self) -> Self {
        self.affine(-T::one(), T::one())
    }

    pub fn exp(&self) -> Self {
        self.unary(Op::Exp(self.index), T::exp)
    }

    pub fn ln(&self) -> Self {
        self.unary(Op::Log(self.index), T::ln)
    }

    pub fn sigmoid(&self) -> Self {
        self.unary(Op::Sigmoid(self.index), sigmoid)
    }

    pub fn log_sigmoid(&self) -> Self {
        self.unary(Op::LogSigmoid(self.index), log_sigmoid)
    }

    pub fn leaky_relu(&self, slope: T) -> Self {
        self.unary(Op::LeakyRelu { x: self.index, slope }, |x| {
            if x > T::zero() {
                x
            } else {
                x * slope
            }
        })
    }

    /// Elementwise clamp; the adjoint passes through inside `[lo, hi]`.
    pub fn clamp(&self, lo: T, hi: T) -> Self {
        self.unary(Op::Clamp { x: self.index, lo, hi }, |x| x.max(lo).min(hi))
    }

    /// Sum of all elements, as a `[1]` array.
    pub fn sum(&self) -> Self {
        let v = NdArray::scalar(self.value().sum());
        self.tape.push(v, Op::Sum(self.index))
    }

    /// Sum along `axis`, removing it.
    pub fn sum_axis(&self, axis: usize) -> Self {
        let x = self.value();
        let (outer, n, inner) = x.axis_split(axis);
        let xs = x.as_slice();
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for k in 0..n {
                let row = &xs[(o * n + k) * inner..(o * n + k + 1) * inner];
                for (acc, &v) in out[o * inner..(o + 1) * inner].iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }
        }
        let dims = removed_axis(x.dims(), axis);
        self.tape
            .push(NdArray::from_vec(&dims, out), Op::SumAxis { x: self.index, axis })
    }

    /// The slice at `index` along `axis`, removing the axis.
    pub fn select(&self, axis: usize, index: usize) -> Self {
        let x = self.value();
        let (outer, n, inner) = x.axis_split(axis);
        assert!(index < n, "select index {index} out of range {n}");
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let at = (o * n + index) * inner;
            out.extend_from_slice(&x.as_slice()[at..at + inner]);
        }
        let dims = removed_axis(x.dims(), axis);
        self.tape.push(
            NdArray::from_vec(&dims, out),
            Op::Select { x: self.index, axis, index },
        )
    }

    /// Rows `start..start + len` of the leading axis.
    pub fn slice0(&self, start: usize, len: usize) -> Self {
        let x = self.value();
        assert!(start + len <= x.dims()[0] && len > 0, "slice0 out of range");
        let row: usize = x.dims()[1..].iter().product();
        let mut dims = x.dims().to_vec();
        dims[0] = len;
        let v = x.as_slice()[start * row..(start + len) * row].to_vec();
        self.tape
            .push(NdArray::from_vec(&dims, v), Op::Slice0 { x: self.index, start })
    }

    /// Concatenation along the leading axis.
    pub fn concat0(parts: &[Self]) -> Self {
        assert!(!parts.is_empty(), "concat0 of nothing");
        let first = parts[0].value();
        let tail = &first.dims()[1..];
        let mut lead = 0;
        let mut data = Vec::new();
        for p in parts {
            parts[0].same_tape(p);
            let v = p.value();
            assert_eq!(&v.dims()[1..], tail, "concat0 trailing dims differ");
            lead += v.dims()[0];
            data.extend_from_slice(v.as_slice());
        }
        let mut dims = vec![lead];
        dims.extend_from_slice(tail);
        parts[0].tape.push(
            NdArray::from_vec(&dims, data),
            Op::Concat0(parts.iter().map(|p| p.index).collect()),
        )
    }

    pub fn reshape(&self, dims: &[usize]) -> Self {
        let v = (*self.value()).clone().reshape(dims).expect("reshape");
        self.tape.push(v, Op::Reshape(self.index))
    }

    pub fn cumsum(&self, axis: usize) -> Self {
        let v = scan::cumsum(&self.value(), axis);
        self.tape.push(v, Op::CumSum { x: self.index, axis })
    }

    /// Inclusive cumulative product along `axis`.
    pub fn cumprod(&self, axis: usize) -> Self {
        self.cumprod_impl(axis, false)
    }

    /// `out_k = prod_{j<k} x_j` along `axis` (first entry 1).
    pub fn cumprod_exclusive(&self, axis: usize) -> Self {
        self.cumprod_impl(axis, true)
    }

    fn cumprod_impl(&self, axis: usize, exclusive: bool) -> Self {
        let v = scan::cumprod(&self.value(), axis, exclusive);
        self.tape.push(
            v,
            Op::CumProd {
                x: self.index,
                axis,
                exclusive,
            },
        )
    }

    /// `w: [out, in]` times flattened `self`, plus `b: [out]`.
    pub fn dense(&self, w: &Self, b: &Self) -> Self {
        self.same_tape(w);
        self.same_tape(b);
        let (x, wv, bv) = (self.value(), w.value(), b.value());
        assert_eq!(wv.dims().len(), 2, "dense weight must be [out, in]");
        let (out, inp) = (wv.dims()[0], wv.dims()[1]);
        assert_eq!(x.len(), inp, "dense input length mismatch");
        assert_eq!(bv.dims(), [out], "dense bias must be [out]");
        let mut y = bv.as_slice().to_vec();
        super::real::matmul(out, inp, 1, wv.as_slice(), false, x.as_slice(), false, T::one(), &mut y);
        self.tape.push(
            NdArray::from_vec(&[out], y),
            Op::Dense {
                x: self.index,
                w: w.index,
                b: b.index,
            },
        )
    }

    pub fn conv2d(&self, w: &Self, b: &Self, stride: usize, pad: usize) -> Self {
        self.same_tape(w);
        self.same_tape(b);
        let v = conv::conv2d(&self.value(), &w.value(), &b.value(), stride, pad);
        self.tape.push(
            v,
            Op::Conv2d {
                x: self.index,
                w: w.index,
                b: b.index,
                stride,
                pad,
            },
        )
    }

    pub fn conv_transpose3d(&self, w: &Self, b: &Self, stride: usize, pad: usize) -> Self {
        self.same_tape(w);
        self.same_tape(b);
        let v = conv::conv_transpose3d(&self.value(), &w.value(), &b.value(), stride, pad);
        self.tape.push(
            v,
            Op::ConvTranspose3d {
                x: self.index,
                w: w.index,
                b: b.index,
                stride,
                pad,
            },
        )
    }

    /// Applies a sparse gather to the trailing `map.in_len()` elements of
    /// every leading channel; `out_dims` is the full result shape.
    pub fn gather(&self, map: Arc<GatherMap<T>>, out_dims: &[usize]) -> Self {
        let v = map.apply(&self.value(), out_dims);
        self.tape.push(v, Op::Gather { x: self.index, map })
    }
}

fn removed_axis(dims: &[usize], axis: usize) -> Vec<usize> {
    let mut d: Vec<usize> = dims.to_vec();
    d.remove(axis);
    if d.is_empty() {
        d.push(1);
    }
    d
}

impl<'t, T: Real> Add for Var<'t, T> {
    type Output = Var<'t, T>;
    fn add(self, rhs: Self) -> Self::Output {
        Var::add(&self, &rhs)
    }
}

impl<'t, T: Real> Sub for Var<'t, T> {
    type Output = Var<'t, T>;
    fn sub(self, rhs: Self) -> Self::Output {
        Var::sub(&self, &rhs)
    }
}

impl<'t, T: Real> Mul for Var<'t, T> {
    type Output = Var<'t, T>;
    fn mul(self, rhs: Self) -> Self::Output {
        Var::mul(&self, &rhs)
    }
}

impl<'t, T: Real> Neg for Var<'t, T> {
    type Output = Var<'t, T>;
    fn neg(self) -> Self::Output {
        self.scale(-T::one())
    }
}
