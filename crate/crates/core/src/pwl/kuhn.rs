//! Piecewise linear interpolation on the Kuhn (Freudenthal) triangulation.
//!
//! The grid of spacing `δ` is split cell by cell into `d!` simplices, one per
//! ordering of the local coordinates. A point with local coordinates
//! `f ∈ [0,1]^d` lies in the simplex of the permutation `π` sorting `f`
//! decreasingly, whose vertices are `c, c + e_{π1}, c + e_{π1} + e_{π2}, ...`;
//! its barycentric weights are the successive differences of the sorted `f`.

use crate::field::ScalarField;
use crate::geometry::box_midpoints;
use crate::pwl::Breakpoints1D;
use crate::{Error, Result, Scalar};

/// CPWL interpolant of a compactly supported function on a Kuhn grid.
///
/// The vertex grid covers the support box inflated by one cell on every side;
/// the interpolant is zero outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct CpwlInterpolant<T> {
    origin: Vec<T>,
    delta: T,
    /// Cells per axis; there are `cells + 1` vertices per axis.
    cells: Vec<usize>,
    values: Vec<T>,
}

/// Builds the interpolant agreeing with `phi` at every grid vertex.
///
/// `support_lo`/`support_hi` bound the support of `phi`.
pub fn kuhn_interpolant<T: Scalar>(
    phi: impl Fn(&[T]) -> T,
    support_lo: &[T],
    support_hi: &[T],
    delta: T,
) -> Result<CpwlInterpolant<T>> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("mesh width {delta} must be positive")));
    }
    let d = support_lo.len();
    if d == 0 || support_hi.len() != d || support_lo.iter().zip(support_hi).any(|(l, h)| !(h >= l)) {
        return Err(Error::InvalidInput("malformed support box".into()));
    }
    let origin: Vec<T> = support_lo.iter().map(|&l| l - delta).collect();
    let cells: Vec<usize> = support_lo
        .iter()
        .zip(support_hi)
        .map(|(&l, &h)| {
            // at least one cell beyond the support on each side
            ((h - l) / delta).ceil().to_usize().unwrap_or(0) + 2
        })
        .collect();
    let total: usize = cells.iter().map(|c| c + 1).product();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![T::zero(); d];
    for _ in 0..total {
        for k in 0..d {
            x[k] = origin[k] + T::from_usize_lossy(idx[k]) * delta;
        }
        values.push(phi(&x));
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] <= cells[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(CpwlInterpolant {
        origin,
        delta,
        cells,
        values,
    })
}

impl<T: Scalar> CpwlInterpolant<T> {
    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Box covered by the vertex grid.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let hi = self
            .origin
            .iter()
            .zip(&self.cells)
            .map(|(&o, &c)| o + T::from_usize_lossy(c) * self.delta)
            .collect();
        (self.origin.clone(), hi)
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.cells)
            .fold(0, |acc, (&i, &c)| acc * (c + 1) + i)
    }

    /// Coordinates of the vertex with multi-index `idx`.
    pub fn vertex(&self, idx: &[usize]) -> Vec<T> {
        self.origin
            .iter()
            .zip(idx)
            .map(|(&o, &i)| o + T::from_usize_lossy(i) * self.delta)
            .collect()
    }

    pub fn vertex_value(&self, idx: &[usize]) -> T {
        self.values[self.flat_index(idx)]
    }

    /// All vertex multi-indices in storage order.
    pub fn vertex_indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let d = self.dim();
        let total = self.values.len();
        let mut idx = vec![0usize; d];
        (0..total).map(move |_| {
            let cur = idx.clone();
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] <= self.cells[k] {
                    break;
                }
                idx[k] = 0;
            }
            cur
        })
    }

    /// Locates `x`: the simplex vertex indices in walk order and the sorted
    /// local coordinates. `None` outside the grid.
    fn locate(&self, x: &[T]) -> Option<(Vec<usize>, Vec<usize>, Vec<T>)> {
        let d = self.dim();
        let mut cell = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for k in 0..d {
            let y = (x[k] - self.origin[k]) / self.delta;
            let n = T::from_usize_lossy(self.cells[k]);
            if !(y >= T::zero() && y <= n) {
                return None;
            }
            let c = y.floor().min(n - T::one());
            cell.push(c.to_usize().unwrap_or(0));
            frac.push(y - c);
        }
        let mut order: Vec<usize> = (0..d).collect();
        // stable sort keeps ties on the lower-index axis first, deterministically
        order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap_or(std::cmp::Ordering::Equal));
        let sorted = order.iter().map(|&k| frac[k]).collect();
        Some((cell, order, sorted))
    }

    /// Interpolated value; zero outside the grid.
    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dim());
        let Some((mut v, order, f)) = self.locate(x) else {
            return T::zero();
        };
        let d = self.dim();
        let mut acc = (T::one() - f[0]) * self.vertex_value(&v);
        for j in 0..d {
            v[order[j]] += 1;
            let w = if j + 1 < d { f[j] - f[j + 1] } else { f[j] };
            acc = acc + w * self.vertex_value(&v);
        }
        acc
    }

    /// Gradient on the simplex containing `x`; zero outside the grid.
    pub fn grad(&self, x: &[T]) -> Vec<T> {
        let d = self.dim();
        let mut g = vec![T::zero(); d];
        let Some((mut v, order, _)) = self.locate(x) else {
            return g;
        };
        let mut prev = self.vertex_value(&v);
        for &axis in &order {
            v[axis] += 1;
            let cur = self.vertex_value(&v);
            g[axis] = (cur - prev) / self.delta;
            prev = cur;
        }
        g
    }

    /// The 1-D interpolant as breakpoints with zero extension outside the grid.
    pub fn to_breakpoints(&self) -> Result<Breakpoints1D<T>> {
        if self.dim() != 1 {
            return Err(Error::InvalidInput(format!(
                "breakpoints need a 1-D interpolant (dimension {})",
                self.dim()
            )));
        }
        let first = self.values[0];
        let last = *self.values.last().expect("vertices");
        if first != T::zero() || last != T::zero() {
            return Err(Error::InvalidInput(
                "interpolant does not vanish on the grid boundary".into(),
            ));
        }
        let knots = (0..=self.cells[0]).map(|i| self.vertex(&[i])[0]).collect();
        Breakpoints1D::new(knots, self.values.clone(), T::zero(), T::zero())
    }
}

impl<T: Scalar> ScalarField<T> for CpwlInterpolant<T> {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn value(&self, x: &[T]) -> T {
        self.eval(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.grad(x)
    }
}

/// `L^p` and `W^{1,p}` distances returned by [`sobolev_error`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevError<T> {
    pub lp: T,
    pub w1p: T,
}

/// Distance between `phi` and its interpolant in `L^p` and `W^{1,p}`, by
/// midpoint quadrature with `resolution` nodes per axis over the grid box.
/// `p = ∞` takes the maximum over quadrature nodes.
pub fn sobolev_error<T: Scalar>(
    phi: impl Fn(&[T]) -> T,
    grad_phi: impl Fn(&[T]) -> Vec<T>,
    interp: &CpwlInterpolant<T>,
    p: T,
    resolution: usize,
) -> Result<SobolevError<T>> {
    let (lo, hi) = interp.bounding_box();
    sobolev_error_on(phi, grad_phi, interp, &lo, &hi, interp.delta(), p, resolution)
}

/// [`sobolev_error`] for any approximant over an explicit box.
#[allow(clippy::too_many_arguments)]
pub fn sobolev_error_on<T: Scalar>(
    phi: impl Fn(&[T]) -> T,
    grad_phi: impl Fn(&[T]) -> Vec<T>,
    approx: &dyn ScalarField<T>,
    lo: &[T],
    hi: &[T],
    delta: T,
    p: T,
    resolution: usize,
) -> Result<SobolevError<T>> {
    let d = lo.len();
    if d > 3 {
        return Err(Error::InvalidInput(format!("quadrature limited to d <= 3 (got {d})")));
    }
    if !(p >= T::one()) {
        return Err(Error::InvalidInput(format!("p = {p} must be at least 1")));
    }
    let widest = lo
        .iter()
        .zip(hi)
        .map(|(&l, &h)| h - l)
        .fold(T::zero(), T::max);
    let required = (widest * T::lit(4.0) / delta).ceil().to_usize().unwrap_or(usize::MAX);
    if resolution < required {
        return Err(Error::Resolution {
            given: resolution,
            required,
        });
    }
    let q = box_midpoints(lo, hi, resolution);
    let mut value_acc = T::zero();
    let mut grad_acc = T::zero();
    let infinite = p.is_infinite();
    for (x, w) in q.iter() {
        let dv = (approx.value(x) - phi(x)).abs();
        let gs = approx.gradient(x);
        let gp = grad_phi(x);
        let dg = gs
            .iter()
            .zip(&gp)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        if infinite {
            value_acc = value_acc.max(dv);
            grad_acc = grad_acc.max(dg);
        } else {
            value_acc = value_acc + w * dv.powf(p);
            grad_acc = grad_acc + w * dg.powf(p);
        }
    }
    Ok(if infinite {
        SobolevError {
            lp: value_acc,
            w1p: value_acc.max(grad_acc),
        }
    } else {
        SobolevError {
            lp: value_acc.powf(T::one() / p),
            w1p: (value_acc + grad_acc).powf(T::one() / p),
        }
    })
}

/// Standard mollifier bump `exp(−1/(1−|x|²))` on the open unit ball.
pub fn bump<T: Scalar>(x: &[T]) -> T {
    let r2 = crate::scalar::norm_sq(x);
    if r2 < T::one() {
        (-T::one() / (T::one() - r2)).exp()
    } else {
        T::zero()
    }
}

/// Gradient of [`bump`]: `−2x φ(x) / (1−|x|²)²`.
pub fn bump_gradient<T: Scalar>(x: &[T]) -> Vec<T> {
    let r2 = crate::scalar::norm_sq(x);
    if r2 < T::one() {
        let s = T::one() - r2;
        let c = -T::two() * bump(x) / (s * s);
        x.iter().map(|&xi| c * xi).collect()
    } else {
        vec![T::zero(); x.len()]
    }
}
