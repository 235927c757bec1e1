//! Exact maxima and minima of ReLU networks.
//!
//! Two networks of equal depth are run side by side and their outputs merged
//! by one hidden layer implementing
//!
//! ```text
//! max(a, b) = ½(ρ(a+b) − ρ(−a−b) + ρ(a−b) + ρ(b−a))
//! ```
//!
//! A balanced binary tree of such merges handles `k` networks, so the result
//! has depth `max_i depth_i + ⌈log₂ k⌉`. Shallower operands are lifted with
//! identity layers `z = ρ(z) − ρ(−z)`.

use crate::net::{Layer, NetworkParams};
use crate::{Error, Result, Scalar};

/// Depth of [`relu_max`] / [`relu_min`] for operands of the given depths.
pub fn max_tree_depth(depths: &[usize]) -> usize {
    let k = depths.len();
    let levels = if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    };
    depths.iter().copied().max().unwrap_or(0) + levels
}

/// Pointwise maximum of scalar networks with a common input dimension.
pub fn relu_max<T: Scalar>(nets: &[NetworkParams<T>]) -> Result<NetworkParams<T>> {
    let first = nets
        .first()
        .ok_or_else(|| Error::InvalidInput("maximum of an empty family".into()))?;
    let d = first.input_dim();
    if let Some(bad) = nets.iter().find(|n| n.input_dim() != d) {
        return Err(Error::Shape(format!(
            "input dimensions {d} and {} differ",
            bad.input_dim()
        )));
    }
    if nets.len() == 1 {
        return Ok(first.clone());
    }
    let mut level: Vec<Vec<Layer<T>>> = nets.iter().map(|n| n.layers().to_vec()).collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(max_pair(a, b)?),
                None => next.push(a),
            }
        }
        level = next;
    }
    NetworkParams::new(level.pop().expect("one survivor"))
}

/// Pointwise minimum, `min_i u_i = −max_i(−u_i)`.
pub fn relu_min<T: Scalar>(nets: &[NetworkParams<T>]) -> Result<NetworkParams<T>> {
    let negated: Vec<_> = nets.iter().map(negate).collect::<Result<_>>()?;
    negate(&relu_max(&negated)?)
}

/// Network realising `−u`.
pub fn negate<T: Scalar>(net: &NetworkParams<T>) -> Result<NetworkParams<T>> {
    let mut out = net.clone();
    let last = out.layers_mut().last_mut().expect("nonempty");
    last.weights_mut().iter_mut().for_each(|w| *w = -*w);
    last.bias_mut().iter_mut().for_each(|b| *b = -*b);
    Ok(out)
}

fn max_pair<T: Scalar>(a: Vec<Layer<T>>, b: Vec<Layer<T>>) -> Result<Vec<Layer<T>>> {
    let depth = a.len().max(b.len());
    let a = lift(a, depth)?;
    let b = lift(b, depth)?;
    let mut stacked = parallel(&a, &b)?;
    let last = stacked.pop().expect("nonempty");
    // gadget rows over (a, b): a+b, −a−b, a−b, b−a
    let gadget = [[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];
    let n = last.cols();
    let mut weights = Vec::with_capacity(4 * n);
    let mut bias = Vec::with_capacity(4);
    for g in gadget {
        let (ga, gb) = (T::lit(g[0]), T::lit(g[1]));
        for j in 0..n {
            weights.push(ga * last.weight(0, j) + gb * last.weight(1, j));
        }
        bias.push(ga * last.bias()[0] + gb * last.bias()[1]);
    }
    stacked.push(Layer::new(4, n, weights, bias)?);
    let h = T::half();
    stacked.push(Layer::new(1, 4, vec![h, -h, h, h], vec![T::zero()])?);
    Ok(stacked)
}

/// Appends identity layers until the stack has `depth` layers.
fn lift<T: Scalar>(mut layers: Vec<Layer<T>>, depth: usize) -> Result<Vec<Layer<T>>> {
    while layers.len() < depth {
        let last = layers.pop().expect("nonempty");
        let (m, n) = (last.rows(), last.cols());
        let mut weights = last.weights().to_vec();
        weights.extend(last.weights().iter().map(|&w| -w));
        let mut bias = last.bias().to_vec();
        bias.extend(last.bias().iter().map(|&b| -b));
        layers.push(Layer::new(2 * m, n, weights, bias)?);
        let mut out = vec![T::zero(); m * 2 * m];
        for i in 0..m {
            out[i * 2 * m + i] = T::one();
            out[i * 2 * m + m + i] = -T::one();
        }
        layers.push(Layer::new(m, 2 * m, out, vec![T::zero(); m])?);
    }
    Ok(layers)
}

/// Side-by-side composition of two equal-depth stacks sharing the input.
fn parallel<T: Scalar>(a: &[Layer<T>], b: &[Layer<T>]) -> Result<Vec<Layer<T>>> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(l, (la, lb))| {
            let rows = la.rows() + lb.rows();
            let mut bias = la.bias().to_vec();
            bias.extend_from_slice(lb.bias());
            if l == 0 {
                let mut weights = la.weights().to_vec();
                weights.extend_from_slice(lb.weights());
                Layer::new(rows, la.cols(), weights, bias)
            } else {
                let cols = la.cols() + lb.cols();
                let mut weights = vec![T::zero(); rows * cols];
                for i in 0..la.rows() {
                    weights[i * cols..i * cols + la.cols()].copy_from_slice(la.row(i));
                }
                for i in 0..lb.rows() {
                    let r = la.rows() + i;
                    weights[r * cols + la.cols()..(r + 1) * cols].copy_from_slice(lb.row(i));
                }
                Layer::new(rows, cols, weights, bias)
            }
        })
        .collect()
}
