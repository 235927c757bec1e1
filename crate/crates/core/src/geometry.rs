//! Domains with exact measures, uniform samplers and tensor-grid quadrature nodes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result, Scalar};

/// Bounded domain `Ω ⊂ R^d`.
///
/// In one dimension the boundary measure is the counting measure of the two
/// endpoints, so boundary integrals become `g(a) + g(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub enum Domain<T> {
    Interval { a: T, b: T },
    Hypercube { a: T, b: T, dim: usize },
    Ball { center: Vec<T>, radius: T },
}

/// Points drawn uniformly from a region together with the weight turning a
/// sample sum into an integral estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T> {
    dim: usize,
    points: Vec<T>,
    /// Measure of the sampled region.
    pub measure: T,
    /// `measure / count`.
    pub weight: T,
    pub seed: u64,
}

impl<T: Scalar> SampleBatch<T> {
    pub fn new(dim: usize, points: Vec<T>, measure: T, seed: u64) -> Self {
        assert!(dim >= 1 && !points.is_empty() && points.len().is_multiple_of(dim));
        let weight = measure / T::from_usize_lossy(points.len() / dim);
        Self {
            dim,
            points,
            measure,
            weight,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.points.chunks_exact(self.dim)
    }

    /// `measure · mean g(x_i)`, the estimate `weight · Σ g(x_i)` evaluated
    /// as a mean first so constant integrands are reproduced exactly.
    pub fn integrate(&self, g: impl Fn(&[T]) -> T) -> T {
        self.measure * (self.iter().map(g).sum::<T>() / T::from_usize_lossy(self.len()))
    }
}

/// Quadrature nodes with individual weights.
#[derive(Debug, Clone)]
pub struct Quadrature<T> {
    pub dim: usize,
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> Quadrature<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> {
        self.points.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, g: impl Fn(&[T]) -> T) -> T {
        self.iter().map(|(x, w)| w * g(x)).sum()
    }
}

/// Γ(k/2) for a positive integer k.
fn gamma_half(k: usize) -> f64 {
    let (mut value, mut arg) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while arg < k as f64 / 2.0 - 0.25 {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Volume of the unit ball in `R^d`: `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half(dim + 2)
}

impl<T: Scalar> Domain<T> {
    pub fn unit_interval() -> Self {
        Domain::Interval {
            a: T::zero(),
            b: T::one(),
        }
    }

    pub fn unit_cube(dim: usize) -> Self {
        Domain::Hypercube {
            a: T::zero(),
            b: T::one(),
            dim,
        }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Domain::Ball {
            center: vec![T::zero(); dim],
            radius: T::one(),
        }
    }

    /// Checks positivity of the extent and dimension.
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Interval { a, b } => b > a,
            Domain::Hypercube { a, b, dim } => b > a && *dim >= 1,
            Domain::Ball { center, radius } => *radius > T::zero() && !center.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate domain {self:?}")))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Hypercube { dim, .. } => *dim,
            Domain::Ball { center, .. } => center.len(),
        }
    }

    /// `|Ω|`.
    pub fn volume(&self) -> T {
        match self {
            Domain::Interval { a, b } => *b - *a,
            Domain::Hypercube { a, b, dim } => (*b - *a).powi(*dim as i32),
            Domain::Ball { center, radius } => {
                T::lit(unit_ball_volume(center.len())) * radius.powi(center.len() as i32)
            }
        }
    }

    /// `|∂Ω|`; 2 in one dimension.
    pub fn boundary_measure(&self) -> T {
        match self {
            Domain::Interval { .. } => T::two(),
            Domain::Hypercube { a, b, dim } => {
                T::from_usize_lossy(2 * dim) * (*b - *a).powi(*dim as i32 - 1)
            }
            Domain::Ball { center, radius } => {
                if center.len() == 1 {
                    T::two()
                } else {
                    T::from_usize_lossy(center.len()) * self.volume() / *radius
                }
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            Domain::Interval { a, b } => (vec![*a], vec![*b]),
            Domain::Hypercube { a, b, dim } => (vec![*a; *dim], vec![*b; *dim]),
            Domain::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
        }
    }

    /// Closed-set membership with tolerance.
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Ball { center, radius } => dist(x, center) <= *radius + tol,
            _ => {
                let (lo, hi) = self.bounding_box();
                x.iter()
                    .zip(lo.iter().zip(&hi))
                    .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol)
            }
        }
    }

    /// Distance-to-boundary test for closed points.
    pub fn on_boundary(&self, x: &[T], tol: T) -> bool {
        if !self.contains(x, tol) {
            return false;
        }
        match self {
            Domain::Ball { center, radius } => (dist(x, center) - *radius).abs() <= tol,
            _ => {
                let (lo, hi) = self.bounding_box();
                x.iter()
                    .zip(lo.iter().zip(&hi))
                    .any(|(&v, (&l, &h))| (v - l).abs() <= tol || (v - h).abs() <= tol)
            }
        }
    }

    /// `n` i.i.d. uniform points in `Ω` with weight `|Ω|/n`.
    pub fn sample_interior(&self, n: usize, seed: u64) -> SampleBatch<T> {
        assert!(n >= 1, "sample count must be positive");
        let mut rng = seed::rng(seed);
        let d = self.dim();
        let mut points = Vec::with_capacity(n * d);
        match self {
            Domain::Ball { center, radius } => {
                for _ in 0..n {
                    let dir = unit_direction(d, &mut rng);
                    // radius inversion: P(r' <= s) = s^d
                    let u: f64 = rng.random();
                    let r = radius.as_f64() * u.powf(1.0 / d as f64);
                    points.extend(center.iter().zip(&dir).map(|(&c, &v)| c + T::lit(r * v)));
                }
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                for _ in 0..n {
                    for k in 0..d {
                        let u: f64 = rng.random();
                        points.push(lo[k] + (hi[k] - lo[k]) * T::lit(u));
                    }
                }
            }
        }
        SampleBatch::new(d, points, self.volume(), seed)
    }

    /// `m` uniform points on `∂Ω` with weight `|∂Ω|/m`.
    ///
    /// In one dimension the two endpoints are returned with weight 1 whatever `m` is.
    pub fn sample_boundary(&self, m: usize, seed: u64) -> SampleBatch<T> {
        assert!(m >= 1, "sample count must be positive");
        let d = self.dim();
        if d == 1 {
            let (lo, hi) = self.bounding_box();
            return SampleBatch::new(1, vec![lo[0], hi[0]], T::two(), seed);
        }
        let mut rng = seed::rng(seed);
        let mut points = Vec::with_capacity(m * d);
        match self {
            Domain::Ball { center, radius } => {
                for _ in 0..m {
                    let dir = unit_direction(d, &mut rng);
                    points.extend(
                        center
                            .iter()
                            .zip(&dir)
                            .map(|(&c, &v)| c + *radius * T::lit(v)),
                    );
                }
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                // all 2d faces have equal area
                for _ in 0..m {
                    let face = rng.random_range(0..2 * d);
                    let (axis, upper) = (face / 2, face % 2 == 1);
                    for k in 0..d {
                        if k == axis {
                            points.push(if upper { hi[k] } else { lo[k] });
                        } else {
                            let u: f64 = rng.random();
                            points.push(lo[k] + (hi[k] - lo[k]) * T::lit(u));
                        }
                    }
                }
            }
        }
        SampleBatch::new(d, points, self.boundary_measure(), seed)
    }

    /// Stratified interior sample: one uniform point in each cell of a `k^d`
    /// grid on the unit cube, mapped onto `Ω` by a measure-preserving map, so
    /// all cells carry equal weight. `k` is the smallest integer with
    /// `k^d >= n`, so the batch may be larger than `n`. Balls of dimension
    /// above 3 fall back to [`sample_interior`](Self::sample_interior).
    pub fn sample_interior_stratified(&self, n: usize, seed: u64) -> SampleBatch<T> {
        assert!(n >= 1, "sample count must be positive");
        let d = self.dim();
        let mut rng = seed::rng(seed);
        let mut points = Vec::new();
        match self {
            Domain::Ball { center, radius } if d > 1 => {
                if d > 3 {
                    return self.sample_interior(n, seed);
                }
                let df = d as f64;
                for u in jittered(d, n, &mut rng).chunks_exact(d) {
                    let dir = sphere_map(&u[1..]);
                    let r = radius.as_f64() * u[0].powf(1.0 / df);
                    points.extend(center.iter().zip(&dir).map(|(&c, &v)| c + T::lit(r * v)));
                }
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                for u in jittered(d, n, &mut rng).chunks_exact(d) {
                    points.extend((0..d).map(|k| lo[k] + (hi[k] - lo[k]) * T::lit(u[k])));
                }
            }
        }
        SampleBatch::new(d, points, self.volume(), seed)
    }

    /// Stratified boundary sample. Hypercube faces each get a jittered grid of
    /// `k^{d-1} >= m/(2d)` points; circles and spheres get a jittered grid in
    /// area-preserving coordinates. 1-D boundaries are the two endpoints.
    pub fn sample_boundary_stratified(&self, m: usize, seed: u64) -> SampleBatch<T> {
        assert!(m >= 1, "sample count must be positive");
        let d = self.dim();
        if d == 1 {
            return self.sample_boundary(m, seed);
        }
        let mut rng = seed::rng(seed);
        let mut points = Vec::new();
        match self {
            Domain::Ball { center, radius } => {
                if d > 3 {
                    return self.sample_boundary(m, seed);
                }
                for u in jittered(d - 1, m, &mut rng).chunks_exact(d - 1) {
                    let dir = sphere_map(u);
                    points.extend(center.iter().zip(&dir).map(|(&c, &v)| c + *radius * T::lit(v)));
                }
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                let per_face = m.div_ceil(2 * d);
                for face in 0..2 * d {
                    let (axis, upper) = (face / 2, face % 2 == 1);
                    for u in jittered(d - 1, per_face, &mut rng).chunks_exact(d - 1) {
                        let mut it = u.iter();
                        for k in 0..d {
                            points.push(if k == axis {
                                if upper { hi[k] } else { lo[k] }
                            } else {
                                lo[k] + (hi[k] - lo[k]) * T::lit(*it.next().expect("d-1 coords"))
                            });
                        }
                    }
                }
            }
        }
        SampleBatch::new(d, points, self.boundary_measure(), seed)
    }

    /// Composite midpoint rule on `res` cells per axis of the bounding box,
    /// restricted to `Ω` for balls.
    pub fn interior_quadrature(&self, res: usize) -> Quadrature<T> {
        let (lo, hi) = self.bounding_box();
        let mut q = box_midpoints(&lo, &hi, res);
        if let Domain::Ball { center, radius } = self {
            let d = q.dim;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (x, w) in q.points.chunks_exact(d).zip(&q.weights) {
                if dist(x, center) < *radius {
                    points.extend_from_slice(x);
                    weights.push(*w);
                }
            }
            q.points = points;
            q.weights = weights;
        }
        q
    }

    /// Boundary quadrature: endpoints in 1-D, midpoint grids on the faces of a
    /// hypercube, and angular midpoint grids on circles and spheres.
    pub fn boundary_quadrature(&self, res: usize) -> Result<Quadrature<T>> {
        let d = self.dim();
        let (lo, hi) = self.bounding_box();
        if d == 1 {
            return Ok(Quadrature {
                dim: 1,
                points: vec![lo[0], hi[0]],
                weights: vec![T::one(), T::one()],
            });
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match self {
            Domain::Ball { center, radius } => match d {
                2 => {
                    let h = T::two() * T::PI() / T::from_usize_lossy(res);
                    for i in 0..res {
                        let t = (T::from_usize_lossy(i) + T::half()) * h;
                        points.push(center[0] + *radius * t.cos());
                        points.push(center[1] + *radius * t.sin());
                        weights.push(*radius * h);
                    }
                }
                3 => {
                    let ht = T::PI() / T::from_usize_lossy(res);
                    let hp = T::two() * T::PI() / T::from_usize_lossy(2 * res);
                    for i in 0..res {
                        let th = (T::from_usize_lossy(i) + T::half()) * ht;
                        for j in 0..2 * res {
                            let ph = (T::from_usize_lossy(j) + T::half()) * hp;
                            points.push(center[0] + *radius * th.sin() * ph.cos());
                            points.push(center[1] + *radius * th.sin() * ph.sin());
                            points.push(center[2] + *radius * th.cos());
                            weights.push(*radius * *radius * th.sin() * ht * hp);
                        }
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "boundary quadrature of a ball in dimension {d}"
                    )))
                }
            },
            _ => {
                for axis in 0..d {
                    let flo: Vec<T> = (0..d).filter(|&k| k != axis).map(|k| lo[k]).collect();
                    let fhi: Vec<T> = (0..d).filter(|&k| k != axis).map(|k| hi[k]).collect();
                    let face = box_midpoints(&flo, &fhi, res);
                    for side in [lo[axis], hi[axis]] {
                        for (y, w) in face.iter() {
                            let mut it = y.iter();
                            for k in 0..d {
                                points.push(if k == axis { side } else { *it.next().unwrap() });
                            }
                            weights.push(w);
                        }
                    }
                }
            }
        }
        Ok(Quadrature {
            dim: d,
            points,
            weights,
        })
    }
}

/// One uniform point in each cell of the smallest `k^dim >= count` grid on
/// `[0, 1)^dim`, flat.
fn jittered(dim: usize, count: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut k = (count as f64).powf(1.0 / dim as f64).floor().max(1.0) as usize;
    while k.pow(dim as u32) < count {
        k += 1;
    }
    let total = k.pow(dim as u32);
    let mut out = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for &i in &idx {
            let u: f64 = rng.random();
            out.push((i as f64 + u) / k as f64);
        }
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < k {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Area-preserving map from `[0,1)^{d-1}` onto the unit sphere in `R^d`, `d ∈ {2, 3}`.
fn sphere_map(u: &[f64]) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    match u.len() {
        1 => vec![(tau * u[0]).cos(), (tau * u[0]).sin()],
        2 => {
            let z = 1.0 - 2.0 * u[0];
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * (tau * u[1]).cos(), s * (tau * u[1]).sin(), z]
        }
        n => unreachable!("sphere map in dimension {}", n + 1),
    }
}

/// Midpoint nodes of a `res^d` grid on the box `[lo, hi]`.
pub fn box_midpoints<T: Scalar>(lo: &[T], hi: &[T], res: usize) -> Quadrature<T> {
    let d = lo.len();
    let h: Vec<T> = lo
        .iter()
        .zip(hi)
        .map(|(&l, &u)| (u - l) / T::from_usize_lossy(res))
        .collect();
    let cell: T = h.iter().copied().fold(T::one(), |a, b| a * b);
    let total = res.pow(d as u32);
    let mut points = Vec::with_capacity(total * d);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for k in 0..d {
            points.push(lo[k] + (T::from_usize_lossy(idx[k]) + T::half()) * h[k]);
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < res {
                break;
            }
            idx[k] = 0;
        }
    }
    Quadrature {
        dim: d,
        points,
        weights: vec![cell; total],
    }
}

fn dist<T: Scalar>(x: &[T], c: &[T]) -> T {
    x.iter()
        .zip(c)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt()
}

fn unit_direction<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_measures() {
        assert_eq!(Domain::<f64>::unit_interval().boundary_measure(), 2.0);
        let sq = Domain::<f64>::unit_cube(2);
        assert_eq!((sq.volume(), sq.boundary_measure()), (1.0, 4.0));
        let cube = Domain::Hypercube { a: -1.0, b: 1.0, dim: 3 };
        assert_eq!((cube.volume(), cube.boundary_measure()), (8.0, 24.0));
        let disk = Domain::<f64>::unit_ball(2);
        assert!((disk.volume() - PI).abs() < 1e-15);
        assert!((disk.boundary_measure() - 2.0 * PI).abs() < 1e-15);
        let ball = Domain::Ball { center: vec![0.0; 3], radius: 2.0 };
        assert!((ball.volume() - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((ball.boundary_measure() - 4.0 * PI * 4.0).abs() < 1e-12);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
    }

    #[test]
    fn interior_samples_are_inside_and_weighted() {
        let sq = Domain::<f64>::unit_cube(2);
        let batch = sq.sample_interior(500, 3);
        assert_eq!(batch.len(), 500);
        assert!(batch.iter().all(|x| x.iter().all(|&v| (0.0..=1.0).contains(&v))));
        assert_eq!(batch.weight, 1.0 / 500.0);

        let disk = Domain::<f64>::unit_ball(2);
        let batch = disk.sample_interior(1000, 4);
        assert!(batch.iter().all(|x| disk.contains(x, 0.0)));
        assert!((batch.weight * 1000.0 - PI).abs() < 1e-12);
    }

    #[test]
    fn mean_of_first_coordinate() {
        let n = 100_000;
        let batch = Domain::<f64>::unit_cube(2).sample_interior(n, 17);
        let est = batch.integrate(|x| x[0]);
        assert!((est - 0.5).abs() <= 3.0 * 0.289 / (n as f64).sqrt(), "estimate {est}");
    }

    #[test]
    fn boundary_samples() {
        let seg = Domain::<f64>::unit_interval().sample_boundary(64, 0);
        assert_eq!(seg.len(), 2);
        assert_eq!((seg.point(0)[0], seg.point(1)[0], seg.weight), (0.0, 1.0, 1.0));

        let sq = Domain::<f64>::unit_cube(2);
        let b = sq.sample_boundary(400, 1);
        assert!((b.weight * 400.0 - 4.0).abs() < 1e-12);
        assert!(b.iter().all(|x| sq.on_boundary(x, 1e-12)));

        let disk = Domain::<f64>::unit_ball(2);
        let b = disk.sample_boundary(300, 2);
        assert!((b.weight * 300.0 - 2.0 * PI).abs() < 1e-12);
        for x in b.iter() {
            assert!((x[0].hypot(x[1]) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let ball = Domain::<f64>::unit_ball(3);
        assert_eq!(ball.sample_interior(50, 9), ball.sample_interior(50, 9));
        assert_ne!(ball.sample_interior(50, 9), ball.sample_interior(50, 10));
        assert_eq!(ball.sample_boundary(50, 9), ball.sample_boundary(50, 9));
    }

    #[test]
    fn quadrature_measures() {
        let sq = Domain::<f64>::unit_cube(2);
        assert!((sq.interior_quadrature(64).integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((sq.boundary_quadrature(64).unwrap().integrate(|_| 1.0) - 4.0).abs() < 1e-12);
        let disk = Domain::<f64>::unit_ball(2);
        assert!((disk.boundary_quadrature(256).unwrap().integrate(|_| 1.0) - 2.0 * PI).abs() < 1e-12);
        // masked midpoint rule on the disk: O(h) boundary error
        assert!((disk.interior_quadrature(512).integrate(|_| 1.0) - PI).abs() < 1e-2);
        let sphere = Domain::<f64>::unit_ball(3);
        assert!((sphere.boundary_quadrature(64).unwrap().integrate(|_| 1.0) - 4.0 * PI).abs() < 5e-3);
        // x_1 integrates to 1/2 on the unit square
        assert!((sq.interior_quadrature(64).integrate(|x| x[0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn domain_config_form() {
        let d: Domain<f64> = serde_json::from_str(r#"{"kind":"hypercube","a":0,"b":1,"dim":2}"#).unwrap();
        assert_eq!(d, Domain::unit_cube(2));
        assert!(Domain::<f64>::Interval { a: 1.0, b: 0.0 }.validate().is_err());
    }

    #[test]
    fn stratified_samples_cover_cells() {
        let sq = Domain::<f64>::unit_cube(2);
        let batch = sq.sample_interior_stratified(1000, 3);
        assert_eq!(batch.len(), 1024); // rounded up to 32²
        let mut seen = vec![false; 1024];
        for x in batch.iter() {
            let (i, j) = ((x[0] * 32.0) as usize, (x[1] * 32.0) as usize);
            seen[i * 32 + j] = true;
        }
        assert!(seen.iter().all(|&b| b));

        let disk = Domain::<f64>::unit_ball(2);
        let b = disk.sample_interior_stratified(400, 1);
        assert!(b.iter().all(|x| disk.contains(x, 0.0)));
        let ball = Domain::Ball { center: vec![1.0, 0.0, -1.0], radius: 0.5 };
        let b = ball.sample_interior_stratified(100, 1);
        assert_eq!(b.len(), 125);
        assert!(b.iter().all(|x| ball.contains(x, 1e-12)));

        let bs = sq.sample_boundary_stratified(100, 2);
        assert_eq!(bs.len(), 100);
        assert!(bs.iter().all(|x| sq.on_boundary(x, 0.0)));
        let sph = ball.sample_boundary_stratified(64, 2);
        assert!(sph.iter().all(|x| ball.on_boundary(x, 1e-12)));
        assert_eq!(Domain::<f64>::unit_interval().sample_boundary_stratified(9, 0).len(), 2);
    }

    #[test]
    fn stratified_estimates_are_unbiased_and_tighter() {
        // ∫ |x|² over the unit disk is π/2
        let disk = Domain::<f64>::unit_ball(2);
        let g = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let spread = |vals: &[f64]| {
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            (m, (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt())
        };
        let strat: Vec<f64> = (0..200).map(|s| disk.sample_interior_stratified(256, s).integrate(g)).collect();
        let iid: Vec<f64> = (0..200).map(|s| disk.sample_interior(256, s).integrate(g)).collect();
        let (ms, ss) = spread(&strat);
        let (_, si) = spread(&iid);
        assert!((ms - PI / 2.0).abs() < 4.0 * ss / (200f64).sqrt() + 1e-12);
        assert!(ss < si / 5.0, "{ss} vs {si}");
        // boundary: ∫ x₀² over the unit circle is π
        let circ: Vec<f64> = (0..200)
            .map(|s| disk.sample_boundary_stratified(64, s).integrate(|x| x[0] * x[0]))
            .collect();
        let (mc, sc) = spread(&circ);
        assert!((mc - PI).abs() < 4.0 * sc / (200f64).sqrt() + 1e-12);
    }
}
