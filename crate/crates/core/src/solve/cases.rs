//! Manufactured solutions with known minimizers.

use std::fmt;
use std::sync::Arc;

use crate::energy::{EnergySpec, Source};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::pwl::Breakpoints1D;
use crate::{Error, Result, Scalar};

type FieldFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// A problem whose exact solution `u_star` is known in closed form.
#[derive(Clone)]
pub struct ManufacturedCase<T> {
    pub name: String,
    pub domain: Domain<T>,
    pub p: T,
    pub source: Source<T>,
    u_star: FieldFn<T>,
    grad_u_star: GradFn<T>,
    /// Minimal value of the unpenalized energy, where known analytically.
    pub f_min: Option<T>,
    /// False for fixtures that are not solutions of the strong equation.
    pub solves_pde: bool,
}

impl<T> fmt::Debug for ManufacturedCase<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ManufacturedCase<T> {
    pub fn new(
        name: impl Into<String>,
        domain: Domain<T>,
        p: T,
        source: Source<T>,
        u_star: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad_u_star: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        f_min: Option<T>,
        solves_pde: bool,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            p,
            source,
            u_star: Arc::new(u_star),
            grad_u_star: Arc::new(grad_u_star),
            f_min,
            solves_pde,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn u_star(&self, x: &[T]) -> T {
        (self.u_star)(x)
    }

    pub fn grad_u_star(&self, x: &[T]) -> Vec<T> {
        (self.grad_u_star)(x)
    }

    /// Penalized energy for this case.
    pub fn energy(&self, penalty: T) -> Result<EnergySpec<T>> {
        EnergySpec::new(self.p, penalty, self.source.clone(), self.domain.clone())
    }

    /// Largest `|u_star|` over `m` boundary samples.
    pub fn boundary_residual(&self, m: usize, seed: u64) -> T {
        self.domain
            .sample_boundary(m, seed)
            .iter()
            .map(|x| self.u_star(x).abs())
            .fold(T::zero(), T::max)
    }

    /// Largest `|−div(|∇u|^{p−2}∇u) − f|` over `n` interior samples, with the
    /// divergence of the exact flux taken by a fourth-order central stencil.
    pub fn pde_residual(&self, n: usize, seed: u64) -> Result<T> {
        if !self.solves_pde {
            return Err(Error::InvalidInput(format!(
                "case {} is not a PDE solution",
                self.name
            )));
        }
        let h = T::lit(1e-3);
        let d = self.dim();
        let flux = |x: &[T], k: usize| {
            let g = self.grad_u_star(x);
            let norm = crate::scalar::norm_sq(&g).sqrt();
            let scale = if self.p == T::two() {
                T::one()
            } else {
                norm.powf(self.p - T::two())
            };
            scale * g[k]
        };
        let mut worst = T::zero();
        for x in self.domain.sample_interior(n, seed).iter() {
            let mut div = T::zero();
            let mut y = x.to_vec();
            for k in 0..d {
                let mut at = |s: f64| {
                    y[k] = x[k] + T::lit(s) * h;
                    flux(&y, k)
                };
                let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
                y[k] = x[k];
                div = div + (-p2 + T::lit(8.0) * p1 - T::lit(8.0) * m1 + m2) / (T::lit(12.0) * h);
            }
            let r = (-div - self.source.eval(x)).abs();
            if !r.is_finite() {
                return Err(Error::Numeric { index: 0, op: "pde_residual" });
            }
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

impl<T: Scalar> ScalarField<T> for ManufacturedCase<T> {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.u_star(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.grad_u_star(x)
    }
}

/// Knot count of the `poisson_1d_pwl` fixture.
pub const PWL_KNOTS: usize = 17;

/// The built-in cases, in a fixed order.
pub fn manufactured_registry<T: Scalar>() -> Vec<ManufacturedCase<T>> {
    let pi = T::PI();
    let pi2 = pi * pi;
    let quarter = T::lit(0.25);
    let mut cases = Vec::new();

    cases.push(ManufacturedCase::new(
        "poisson_1d_sine",
        Domain::unit_interval(),
        T::two(),
        Source::from_fn("pi^2 sin(pi x)", move |x: &[T]| pi2 * (pi * x[0]).sin()),
        move |x: &[T]| (pi * x[0]).sin(),
        move |x: &[T]| vec![pi * (pi * x[0]).cos()],
        Some(-pi2 * quarter),
        true,
    ));

    // The P1 Galerkin solution on a uniform 1-D mesh is the nodal interpolant
    // of the exact solution, so this interpolant is the discrete minimizer of
    // the sine problem over CPWL functions on its own mesh.
    let knots: Vec<T> = (0..PWL_KNOTS)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(PWL_KNOTS - 1))
        .collect();
    let bp = Breakpoints1D::interpolate(knots, |x| (pi * x).sin()).expect("valid knots");
    let bp_grad = bp.clone();
    cases.push(ManufacturedCase::new(
        "poisson_1d_pwl",
        Domain::unit_interval(),
        T::two(),
        Source::from_fn("pi^2 sin(pi x)", move |x: &[T]| pi2 * (pi * x[0]).sin()),
        move |x: &[T]| bp.eval(x[0]),
        move |x: &[T]| vec![bp_grad.slope(x[0])],
        None,
        false,
    ));

    cases.push(ManufacturedCase::new(
        "poisson_cube_d",
        Domain::unit_cube(2),
        T::two(),
        Source::from_fn("2 pi^2 sin(pi x1) sin(pi x2)", move |x: &[T]| {
            T::two() * pi2 * (pi * x[0]).sin() * (pi * x[1]).sin()
        }),
        move |x: &[T]| (pi * x[0]).sin() * (pi * x[1]).sin(),
        move |x: &[T]| {
            vec![
                pi * (pi * x[0]).cos() * (pi * x[1]).sin(),
                pi * (pi * x[0]).sin() * (pi * x[1]).cos(),
            ]
        },
        Some(-pi2 * quarter),
        true,
    ));

    cases.push(ManufacturedCase::new(
        "poisson_ball",
        Domain::unit_ball(2),
        T::two(),
        Source::constant(T::one()),
        move |x: &[T]| (T::one() - crate::scalar::norm_sq(x)) * quarter,
        move |x: &[T]| x.iter().map(|&v| -v * T::half()).collect(),
        Some(-pi / T::lit(16.0)),
        true,
    ));

    // p = 4: u = (3/4)(1 − |x|^{4/3}), u' = −|x|^{1/3} sign(x), flux |u'|²u' = −x.
    let third = T::one() / T::lit(3.0);
    cases.push(ManufacturedCase::new(
        "plaplace_1d",
        Domain::Interval { a: -T::one(), b: T::one() },
        T::lit(4.0),
        Source::constant(T::one()),
        move |x: &[T]| T::lit(0.75) * (T::one() - x[0].abs().powf(T::lit(4.0) * third)),
        move |x: &[T]| {
            let s = x[0].abs().powf(third);
            vec![if x[0] < T::zero() { s } else { -s }]
        },
        Some(T::lit(-9.0 / 14.0)),
        true,
    ));

    cases
}

/// Registry lookup by name.
pub fn find_case<T: Scalar>(name: &str) -> Result<ManufacturedCase<T>> {
    let cases = manufactured_registry::<T>();
    let names: Vec<String> = cases.iter().map(|c| c.name.clone()).collect();
    cases
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidInput(format!(
            "unknown case {name:?}; available: {}",
            names.join(", ")
        )))
}
