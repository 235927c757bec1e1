//! Reverse-mode differentiation on a scalar tape, with forward-mode input
//! tangents recorded as ordinary tape nodes.
//!
//! Every record stores its value together with the local partial derivative
//! with respect to each operand, so the reverse sweep is a single pass of
//! `adj[operand] += partial * adj[record]` in reverse record order.
//!
//! Recording a network evaluation through [`record_network`] yields the
//! realisation `u_θ(x)` *and* the input gradient `∇ₓu_θ(x)` as tape nodes.
//! A loss built from both can then be differentiated with respect to `θ`
//! (forward-over-reverse). ReLU activation patterns are fixed at recording
//! time: inactive units are replaced by the constant zero, so gradients are
//! exact wherever no pre-activation is exactly zero.

use crate::net::NetworkParams;
use crate::{Error, Result, Scalar};

/// Handle to a tape record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Max,
    Relu,
    PowAbs,
    Scale,
    Offset,
    Sum,
    Dot,
    Norm,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Const => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Max => "max",
            Op::Relu => "relu",
            Op::PowAbs => "pow_abs",
            Op::Scale => "scale",
            Op::Offset => "offset",
            Op::Sum => "sum",
            Op::Dot => "dot",
            Op::Norm => "norm",
        }
    }
}

/// Append-only record list. Records only reference earlier records.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    ops: Vec<Op>,
    values: Vec<T>,
    // operand range of record i is starts[i]..starts[i + 1]
    starts: Vec<u32>,
    operands: Vec<u32>,
    partials: Vec<T>,
    zero: Option<Var>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            ops: Vec::new(),
            values: Vec::new(),
            starts: vec![0],
            operands: Vec::new(),
            partials: Vec::new(),
            zero: None,
        }
    }

    /// Drops all records but keeps the allocations.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.values.clear();
        self.starts.truncate(1);
        self.operands.clear();
        self.partials.clear();
        self.zero = None;
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> T {
        self.values[v.index()]
    }

    pub fn op(&self, v: Var) -> Op {
        self.ops[v.index()]
    }

    #[inline]
    fn finish(&mut self, op: Op, value: T) -> Var {
        let id = self.ops.len();
        self.ops.push(op);
        self.values.push(value);
        self.starts.push(self.operands.len() as u32);
        Var(id as u32)
    }

    #[inline]
    fn operand(&mut self, v: Var, partial: T) {
        self.operands.push(v.0);
        self.partials.push(partial);
    }

    /// Independent variable.
    pub fn var(&mut self, value: T) -> Var {
        self.finish(Op::Leaf, value)
    }

    pub fn constant(&mut self, value: T) -> Var {
        self.finish(Op::Const, value)
    }

    /// Shared constant zero; operands equal to it are skipped by [`dot`](Self::dot).
    pub fn zero(&mut self) -> Var {
        match self.zero {
            Some(z) => z,
            None => {
                let z = self.constant(T::zero());
                self.zero = Some(z);
                z
            }
        }
    }

    fn is_zero(&self, v: Var) -> bool {
        self.zero == Some(v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.operand(a, T::one());
        self.operand(b, T::one());
        self.finish(Op::Add, self.value(a) + self.value(b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.operand(a, T::one());
        self.operand(b, -T::one());
        self.finish(Op::Sub, self.value(a) - self.value(b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.operand(a, vb);
        self.operand(b, va);
        self.finish(Op::Mul, va * vb)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.operand(a, T::one() / vb);
        self.operand(b, -va / (vb * vb));
        self.finish(Op::Div, va / vb)
    }

    /// `max(a, b)`; ties route the derivative to `a`.
    pub fn max(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        if va >= vb {
            self.operand(a, T::one());
            self.finish(Op::Max, va)
        } else {
            self.operand(b, T::one());
            self.finish(Op::Max, vb)
        }
    }

    /// `max(0, a)`. Returns the shared zero when `a <= 0`, freezing the mask.
    pub fn relu(&mut self, a: Var) -> Var {
        let va = self.value(a);
        if va > T::zero() {
            self.operand(a, T::one());
            self.finish(Op::Relu, va)
        } else {
            self.zero()
        }
    }

    /// `|a|^q`. The derivative at `a = 0` is taken as 0 for every `q`.
    pub fn pow_abs(&mut self, a: Var, q: T) -> Var {
        let va = self.value(a);
        let mag = va.abs();
        let partial = if mag == T::zero() {
            T::zero()
        } else {
            q * mag.powf(q - T::one()) * va.signum()
        };
        self.operand(a, partial);
        self.finish(Op::PowAbs, mag.powf(q))
    }

    /// `c * a` for a constant `c`.
    pub fn scale(&mut self, a: Var, c: T) -> Var {
        self.operand(a, c);
        self.finish(Op::Scale, c * self.value(a))
    }

    /// `a / c` for a constant `c`, with the value computed by division.
    pub fn div_const(&mut self, a: Var, c: T) -> Var {
        self.operand(a, T::one() / c);
        self.finish(Op::Scale, self.value(a) / c)
    }

    /// `a + c` for a constant `c`.
    pub fn offset(&mut self, a: Var, c: T) -> Var {
        self.operand(a, T::one());
        self.finish(Op::Offset, self.value(a) + c)
    }

    pub fn sum(&mut self, terms: &[Var]) -> Var {
        let mut acc = T::zero();
        for &t in terms {
            acc = acc + self.value(t);
            self.operand(t, T::one());
        }
        self.finish(Op::Sum, acc)
    }

    /// `Σ_k w_k x_k (+ bias)`; pairs whose `x_k` is the shared zero are dropped.
    pub fn dot(&mut self, weights: &[Var], xs: &[Var], bias: Option<Var>) -> Var {
        debug_assert_eq!(weights.len(), xs.len());
        self.dot_iter(weights.iter().copied(), xs, bias)
    }

    /// Like [`dot`](Self::dot) with weights `first, first+1, ...` stored contiguously.
    pub fn dot_contiguous(&mut self, first: Var, xs: &[Var], bias: Option<Var>) -> Var {
        self.dot_iter((0..xs.len() as u32).map(|k| Var(first.0 + k)), xs, bias)
    }

    fn dot_iter(&mut self, weights: impl Iterator<Item = Var>, xs: &[Var], bias: Option<Var>) -> Var {
        let mut acc = T::zero();
        for (w, &x) in weights.zip(xs) {
            if self.is_zero(x) {
                continue;
            }
            let (vw, vx) = (self.value(w), self.value(x));
            acc = acc + vw * vx;
            self.operand(w, vx);
            self.operand(x, vw);
        }
        if let Some(b) = bias {
            acc = acc + self.value(b);
            self.operand(b, T::one());
        }
        self.finish(Op::Dot, acc)
    }

    /// `Σ_k w_k c_k (+ bias)` for constant coefficients `c`.
    pub fn dot_const(&mut self, first: Var, coeffs: &[T], bias: Option<Var>) -> Var {
        let mut acc = T::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            let w = Var(first.0 + k as u32);
            acc = acc + self.value(w) * c;
            self.operand(w, c);
        }
        if let Some(b) = bias {
            acc = acc + self.value(b);
            self.operand(b, T::one());
        }
        self.finish(Op::Dot, acc)
    }

    /// Euclidean norm; the derivative at the origin is taken as 0.
    pub fn norm(&mut self, xs: &[Var]) -> Var {
        let n = xs.iter().map(|&x| self.value(x).powi(2)).sum::<T>().sqrt();
        for &x in xs {
            let p = if n == T::zero() {
                T::zero()
            } else {
                self.value(x) / n
            };
            self.operand(x, p);
        }
        self.finish(Op::Norm, n)
    }

    /// First record at or before `upto` holding a NaN or infinity.
    pub fn first_non_finite(&self, upto: Var) -> Option<usize> {
        self.values[..=upto.index()]
            .iter()
            .position(|v| !v.is_finite())
    }

    /// Value of `v`, or the first non-finite record it may depend on.
    pub fn checked_value(&self, v: Var) -> Result<T> {
        match self.first_non_finite(v) {
            Some(index) => Err(Error::Numeric {
                index,
                op: self.ops[index].name(),
            }),
            None => Ok(self.value(v)),
        }
    }

    /// Adjoints `∂output/∂record` for every record up to `output`.
    pub fn gradient(&self, output: Var) -> Result<Vec<T>> {
        let mut adj = Vec::new();
        self.gradient_into(output, &mut adj)?;
        Ok(adj)
    }

    /// [`gradient`](Self::gradient) into a reusable buffer.
    pub fn gradient_into(&self, output: Var, adj: &mut Vec<T>) -> Result<()> {
        self.checked_value(output)?;
        let n = output.index() + 1;
        adj.clear();
        adj.resize(n, T::zero());
        adj[output.index()] = T::one();
        for i in (0..n).rev() {
            let a = adj[i];
            if a == T::zero() {
                continue;
            }
            let (lo, hi) = (self.starts[i] as usize, self.starts[i + 1] as usize);
            for k in lo..hi {
                let j = self.operands[k] as usize;
                adj[j] = adj[j] + self.partials[k] * a;
            }
        }
        Ok(())
    }
}

/// Leaf variables for every network parameter, in flat parameter order.
#[derive(Debug, Clone)]
pub struct ParamVars {
    base: u32,
    // (first weight, first bias, rows, cols) per layer
    layout: Vec<(u32, u32, usize, usize)>,
    count: usize,
}

impl ParamVars {
    /// Registers one leaf per parameter of `params` on `tape`.
    pub fn register<T: Scalar>(tape: &mut Tape<T>, params: &NetworkParams<T>) -> Self {
        let base = tape.len() as u32;
        let mut layout = Vec::with_capacity(params.depth());
        for layer in params.layers() {
            let w = tape.len() as u32;
            for &v in layer.weights() {
                tape.var(v);
            }
            let b = tape.len() as u32;
            for &v in layer.bias() {
                tape.var(v);
            }
            layout.push((w, b, layer.rows(), layer.cols()));
        }
        Self {
            base,
            layout,
            count: params.num_params(),
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Leaf of the `i`-th parameter in flat order.
    pub fn flat(&self, i: usize) -> Var {
        assert!(i < self.count);
        Var(self.base + i as u32)
    }

    pub fn weight(&self, layer: usize, i: usize, j: usize) -> Var {
        let (w, _, _, cols) = self.layout[layer];
        Var(w + (i * cols + j) as u32)
    }

    pub fn bias(&self, layer: usize, i: usize) -> Var {
        Var(self.layout[layer].1 + i as u32)
    }

    /// Extracts `∂/∂θ` in flat order from a full adjoint vector.
    pub fn collect<T: Scalar>(&self, adj: &[T]) -> Vec<T> {
        let lo = self.base as usize;
        (lo..lo + self.count)
            .map(|i| adj.get(i).copied().unwrap_or(T::zero()))
            .collect()
    }

    fn accumulate<T: Scalar>(&self, adj: &[T], scale: T, into: &mut [T]) {
        let lo = self.base as usize;
        for (k, g) in into.iter_mut().enumerate() {
            if let Some(&a) = adj.get(lo + k) {
                *g = *g + scale * a;
            }
        }
    }
}

/// Tape nodes of a network evaluation: the output and its input gradient.
#[derive(Debug, Clone)]
pub struct DualVar {
    pub primal: Var,
    pub tangent: Vec<Var>,
}

/// Numeric value of a network evaluation with its input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue<T> {
    pub primal: T,
    pub tangent: Vec<T>,
}

/// Records `u_θ(x)` and `∇ₓu_θ(x)` on the tape.
pub fn record_network<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    x: &[T],
) -> Result<DualVar> {
    record(tape, vars, params, x, true)
}

/// Records `u_θ(x)` only.
pub fn record_value<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    x: &[T],
) -> Result<Var> {
    Ok(record(tape, vars, params, x, false)?.primal)
}

fn record<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    x: &[T],
    tangents: bool,
) -> Result<DualVar> {
    let d = params.input_dim();
    if x.len() != d {
        return Err(Error::Shape(format!(
            "input of length {} for input dimension {d}",
            x.len()
        )));
    }
    let depth = params.depth();
    let layers = params.layers();

    // first layer: the input is constant, and ∂z_i/∂x_k = A_1[i, k] is the weight leaf itself
    let first = &layers[0];
    let mut h: Vec<Var> = (0..first.rows())
        .map(|i| tape.dot_const(vars.weight(0, i, 0), x, Some(vars.bias(0, i))))
        .collect();
    let mut t: Vec<Vec<Var>> = if tangents {
        (0..d)
            .map(|k| (0..first.rows()).map(|i| vars.weight(0, i, k)).collect())
            .collect()
    } else {
        Vec::new()
    };

    for l in 1..depth {
        // activation of layer l-1 output, masks frozen
        let zero = tape.zero();
        for (i, hi) in h.iter_mut().enumerate() {
            let active = tape.value(*hi) > T::zero();
            *hi = tape.relu(*hi);
            if !active {
                for tk in t.iter_mut() {
                    tk[i] = zero;
                }
            }
        }
        let rows = layers[l].rows();
        let next: Vec<Var> = (0..rows)
            .map(|i| tape.dot_contiguous(vars.weight(l, i, 0), &h, Some(vars.bias(l, i))))
            .collect();
        for tk in t.iter_mut() {
            *tk = (0..rows)
                .map(|i| tape.dot_contiguous(vars.weight(l, i, 0), tk, None))
                .collect();
        }
        h = next;
    }
    Ok(DualVar {
        primal: h[0],
        tangent: t.into_iter().map(|tk| tk[0]).collect(),
    })
}

/// Evaluates `u_θ(x)` and `∇ₓu_θ(x)` through the tape.
pub fn forward_with_input_tangents<T: Scalar>(
    params: &NetworkParams<T>,
    x: &[T],
) -> Result<DualValue<T>> {
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params);
    let dual = record_network(&mut tape, &vars, params, x)?;
    Ok(DualValue {
        primal: tape.value(dual.primal),
        tangent: dual.tangent.iter().map(|&v| tape.value(v)).collect(),
    })
}

/// Value and flat parameter gradient of a loss recorded by `loss`.
pub fn grad_params<T, F>(params: &NetworkParams<T>, loss: F) -> Result<(T, Vec<T>)>
where
    T: Scalar,
    F: FnOnce(&mut Tape<T>, &ParamVars) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params);
    let out = loss(&mut tape, &vars)?;
    let adj = tape.gradient(out)?;
    Ok((tape.value(out), vars.collect(&adj)))
}

/// Sum over items of per-item losses, each recorded on its own tape.
///
/// Items are split into fixed chunks so the result does not depend on the
/// number of worker threads; chunk results are merged in index order.
pub fn grad_params_sum<T, I, F>(
    params: &NetworkParams<T>,
    items: &[I],
    chunk: usize,
    per_item: F,
) -> Result<(T, Vec<T>)>
where
    T: Scalar,
    I: Sync,
    F: Fn(&mut Tape<T>, &ParamVars, &I) -> Result<Var> + Sync,
{
    use rayon::prelude::*;

    let chunk = chunk.max(1);
    let parts: Vec<Result<(T, Vec<T>)>> = items
        .par_chunks(chunk)
        .map(|part| {
            let mut tape = Tape::new();
            let mut adj = Vec::new();
            let mut value = T::zero();
            let mut grad = vec![T::zero(); params.num_params()];
            for item in part {
                tape.clear();
                let vars = ParamVars::register(&mut tape, params);
                let out = per_item(&mut tape, &vars, item)?;
                tape.gradient_into(out, &mut adj)?;
                value = value + tape.value(out);
                vars.accumulate(&adj, T::one(), &mut grad);
            }
            Ok((value, grad))
        })
        .collect();
    let mut value = T::zero();
    let mut grad = vec![T::zero(); params.num_params()];
    for part in parts {
        let (v, g) = part?;
        value = value + v;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a = *a + b);
    }
    Ok((value, grad))
}
