//! Fully connected ReLU networks: parameters, realisations and input gradients.
//!
//! A network of depth `L` is the tuple `((A_1, b_1), ..., (A_L, b_L))` with
//! `A_l` of shape `N_l x N_{l-1}`, `N_0 = d` and `N_L = 1`. Its realisation is
//! `T_L ∘ ρ ∘ T_{L-1} ∘ ... ∘ ρ ∘ T_1` with `ρ(x) = max(0, x)`.
//!
//! Weights are stored row-major. The flat parameter order used by the
//! optimizer and by [`crate::autodiff`] is layer by layer, weights first, then
//! biases.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::{seed, Error, Result, Scalar};

/// ReLU, `max(0, x)`.
#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Derivative of ReLU with the subgradient at the kink fixed to 0.
#[inline]
pub fn relu_slope<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// `⌈log₂(d+1)⌉ + 1`, the depth sufficient to represent every CPWL function on `R^d`.
pub fn default_depth(input_dim: usize) -> usize {
    assert!(input_dim >= 1, "input dimension must be positive");
    let n = input_dim + 1;
    // ceil(log2(n)) for n >= 2
    (usize::BITS - (n - 1).leading_zeros()) as usize + 1
}

/// One affine map `x ↦ A x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    rows: usize,
    cols: usize,
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(rows: usize, cols: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "layer of shape {rows}x{cols}"
            )));
        }
        if weights.len() != rows * cols || bias.len() != rows {
            return Err(Error::Shape(format!(
                "layer {rows}x{cols} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![T::zero(); rows * cols], vec![T::zero(); rows])
    }

    pub fn from_rows(rows: &[Vec<T>], bias: Vec<T>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged weight rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), bias)
    }

    /// Output dimension `N_l`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Input dimension `N_{l-1}`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// `A x + b` written into `out`.
    pub fn apply_into(&self, x: &[T], out: &mut Vec<T>) {
        debug_assert_eq!(x.len(), self.cols);
        out.clear();
        out.extend(
            (0..self.rows).map(|i| crate::scalar::dot(self.row(i), x) + self.bias[i]),
        );
    }
}

/// Parameters `θ` of a scalar-output ReLU network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> NetworkParams<T> {
    /// Validates layer shapes: consecutive layers compose and the output is scalar.
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::InvalidArchitecture("network without layers".into()))?;
        if last.rows != 1 {
            return Err(Error::InvalidArchitecture(format!(
                "output dimension {} (expected 1)",
                last.rows
            )));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::Shape(format!(
                    "layer {} has {} columns but layer {} has {} rows",
                    l + 2,
                    pair[1].cols,
                    l + 1,
                    pair[0].rows
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with the given layer sizes `[d, N_1, ..., N_{L-1}, 1]`.
    pub fn zeros(arch: &[usize]) -> Result<Self> {
        check_arch(arch)?;
        let layers = arch
            .windows(2)
            .map(|w| Layer::zeros(w[1], w[0]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// Gaussian weights with standard deviation `√(2/fan_in)`, biases uniform on
    /// `±1/√fan_in`.
    pub fn init(arch: &[usize], seed: u64) -> Result<Self> {
        Self::init_with(arch, seed, |rng, _| {
            let b = 1.0 / (arch[0] as f64).sqrt();
            rng.random_range(-b..b)
        })
    }

    /// Like [`init`](Self::init), but each first-layer unit gets the bias that
    /// puts its kink hyperplane through a uniform random point of the box
    /// `[lo, hi]`, so every unit starts active on part of the domain.
    pub fn init_in_box(arch: &[usize], lo: &[T], hi: &[T], seed: u64) -> Result<Self> {
        if lo.len() != arch[0] || hi.len() != arch[0] {
            return Err(Error::Shape(format!(
                "box of dim {} for input dim {}",
                lo.len(),
                arch[0]
            )));
        }
        Self::init_with(arch, seed, |rng, w| {
            -w.iter()
                .zip(lo.iter().zip(hi))
                .map(|(&wi, (&a, &b))| {
                    let t: f64 = rng.random();
                    wi * (a.as_f64() + t * (b.as_f64() - a.as_f64()))
                })
                .sum::<f64>()
        })
    }

    fn init_with(
        arch: &[usize],
        seed: u64,
        mut first_bias: impl FnMut(&mut ChaCha8Rng, &[f64]) -> f64,
    ) -> Result<Self> {
        check_arch(arch)?;
        let mut rng = seed::rng(seed);
        let mut layers = Vec::with_capacity(arch.len() - 1);
        for (l, w) in arch.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (2.0 / fan_in as f64).sqrt();
            let b = 1.0 / (fan_in as f64).sqrt();
            let mut weights = Vec::with_capacity(fan_in * fan_out);
            let mut bias = Vec::with_capacity(fan_out);
            for _ in 0..fan_out {
                let row: Vec<f64> = (0..fan_in)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scale * z
                    })
                    .collect();
                bias.push(T::lit(if l == 0 {
                    first_bias(&mut rng, &row)
                } else {
                    rng.random_range(-b..b)
                }));
                weights.extend(row.into_iter().map(T::lit));
            }
            layers.push(Layer::new(fan_out, fan_in, weights, bias)?);
        }
        Self::new(layers)
    }

    /// Rectangular architecture `[d, width, ..., width, 1]` of the given depth.
    pub fn rectangular_arch(input_dim: usize, width: usize, depth: usize) -> Vec<usize> {
        let mut arch = vec![input_dim];
        arch.extend(std::iter::repeat_n(width, depth.saturating_sub(1)));
        arch.push(1);
        arch
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Layer<T>> {
        self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layer sizes `[N_0, ..., N_L]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.rows))
            .collect()
    }

    /// `max_l N_l` over `l = 0..=L`.
    pub fn width(&self) -> usize {
        self.dims().into_iter().max().unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.bias);
        }
        flat
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "flat vector of length {} for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            layer.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub fn param_norm(&self) -> T {
        crate::scalar::norm_sq(&self.to_flat()).sqrt()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of length {} for input dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Realisation `u_θ(x)`.
    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        Ok(self.eval(x))
    }

    /// Like [`forward`](Self::forward) but panics on a dimension mismatch.
    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let mut h = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply_into(&h, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = relu(*v));
            }
            std::mem::swap(&mut h, &mut z);
        }
        h[0]
    }

    /// Exact input gradient `∇ₓu_θ(x)`, with the ReLU slope at 0 taken as 0.
    pub fn input_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.eval_gradient(x))
    }

    pub fn eval_gradient(&self, x: &[T]) -> Vec<T> {
        let masks = self.activation_masks(x);
        let last = self.layers.last().expect("nonempty");
        // row vector g = A_L D_{L-1} A_{L-1} ... D_1 A_1, accumulated from the output side
        let mut g = last.row(0).to_vec();
        for (layer, mask) in self.layers.iter().rev().skip(1).zip(masks.iter().rev()) {
            let mut next = vec![T::zero(); layer.cols];
            for (i, (&gi, &active)) in g.iter().zip(mask).enumerate() {
                if active && gi != T::zero() {
                    for (n, &a) in next.iter_mut().zip(layer.row(i)) {
                        *n = *n + gi * a;
                    }
                }
            }
            g = next;
        }
        g
    }

    /// Activation pattern `pre-activation > 0` of every hidden unit at `x`.
    pub fn activation_masks(&self, x: &[T]) -> Vec<Vec<bool>> {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let mut masks = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut h = x.to_vec();
        let mut z = Vec::new();
        for layer in &self.layers[..self.layers.len() - 1] {
            layer.apply_into(&h, &mut z);
            masks.push(z.iter().map(|&v| v > T::zero()).collect());
            z.iter_mut().for_each(|v| *v = relu(*v));
            std::mem::swap(&mut h, &mut z);
        }
        masks
    }

    /// Smallest absolute pre-activation over all hidden units at `x`.
    pub fn min_abs_preactivation(&self, x: &[T]) -> T {
        let mut h = x.to_vec();
        let mut z = Vec::new();
        let mut best = T::infinity();
        for layer in &self.layers[..self.layers.len() - 1] {
            layer.apply_into(&h, &mut z);
            for v in z.iter_mut() {
                best = best.min(v.abs());
                *v = relu(*v);
            }
            std::mem::swap(&mut h, &mut z);
        }
        best
    }

    /// Embeds `self` into a wider rectangular network realising the same function.
    ///
    /// Existing entries are copied. Weights feeding new hidden units are drawn
    /// like [`init`](Self::init); weights leaving new units are zero, so the
    /// realisation is unchanged while the new units still receive gradient.
    pub fn widen(&self, target: &[usize], seed: u64) -> Result<Self> {
        self.widen_into(Self::init(target, seed)?)
    }

    /// [`widen`](Self::widen) with new units taken from `fresh`, whose
    /// architecture is the target.
    pub fn widen_into(&self, mut fresh: Self) -> Result<Self> {
        let dims = self.dims();
        let target = fresh.dims();
        if target.len() != dims.len()
            || target[0] != dims[0]
            || target.last() != dims.last()
            || target.iter().zip(&dims).any(|(t, d)| t < d)
        {
            return Err(Error::InvalidArchitecture(format!(
                "cannot widen {dims:?} into {target:?}"
            )));
        }
        let last = self.layers.len() - 1;
        for (l, (old, new)) in self.layers.iter().zip(fresh.layers.iter_mut()).enumerate() {
            for i in 0..new.rows {
                for j in 0..new.cols {
                    let w = &mut new.weights[i * new.cols + j];
                    if i < old.rows && j < old.cols {
                        *w = old.weight(i, j);
                    } else if i < old.rows || l == last {
                        // old unit (or the output) reading from a new unit
                        *w = T::zero();
                    }
                }
                if i < old.rows {
                    new.bias[i] = old.bias[i];
                }
            }
        }
        Ok(fresh)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetworkDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: NetworkDoc<T> = serde_json::from_str(s)?;
        doc.try_into()
    }
}

fn check_arch(arch: &[usize]) -> Result<()> {
    if arch.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "{arch:?} has fewer than two layer sizes"
        )));
    }
    if arch.contains(&0) {
        return Err(Error::InvalidArchitecture(format!(
            "{arch:?} contains a zero-size layer"
        )));
    }
    if arch.last() != Some(&1) {
        return Err(Error::InvalidArchitecture(format!(
            "{arch:?} must end with a scalar output"
        )));
    }
    Ok(())
}

impl<T: Scalar> ScalarField<T> for NetworkParams<T> {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.eval(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.eval_gradient(x)
    }
}

/// On-disk JSON form: `{depth, dims, weights, biases}` with row-major weights.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct NetworkDoc<T> {
    pub depth: usize,
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> From<&NetworkParams<T>> for NetworkDoc<T> {
    fn from(p: &NetworkParams<T>) -> Self {
        Self {
            depth: p.depth(),
            dims: p.dims(),
            weights: p.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: p.layers.iter().map(|l| l.bias.clone()).collect(),
        }
    }
}

impl<T: Scalar> TryFrom<NetworkDoc<T>> for NetworkParams<T> {
    type Error = Error;

    fn try_from(doc: NetworkDoc<T>) -> Result<Self> {
        if doc.dims.len() != doc.depth + 1
            || doc.weights.len() != doc.depth
            || doc.biases.len() != doc.depth
        {
            return Err(Error::Shape(format!(
                "document declares depth {} with {} dims, {} weight and {} bias arrays",
                doc.depth,
                doc.dims.len(),
                doc.weights.len(),
                doc.biases.len()
            )));
        }
        let layers = doc
            .weights
            .into_iter()
            .zip(doc.biases)
            .zip(doc.dims.windows(2))
            .map(|((w, b), d)| Layer::new(d[1], d[0], w, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }
}
