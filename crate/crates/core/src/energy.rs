//! Monte-Carlo estimators of the penalized p-Dirichlet energy
//!
//! ```text
//! F_λ(u) = (1/p) ∫_Ω |∇u|^p dx − ∫_Ω f u dx + λ · ‖u‖²_{L^p(∂Ω)}
//! ```
//!
//! For `p = 2` the penalty is `λ ∫_{∂Ω} u² ds`. Estimators are recorded on an
//! [`autodiff::Tape`] so the same code path yields values and parameter
//! gradients. [`quadrature_energy`] evaluates the same functional on a tensor
//! grid and is only used to validate the estimators.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::autodiff::{self, ParamVars, Tape, Var};
use crate::field::ScalarField;
use crate::geometry::{Domain, SampleBatch};
use crate::net::NetworkParams;
use crate::{seed, Error, Result, Scalar};

/// Sample chunk size for batched gradients; fixed so results do not depend on threading.
pub const GRAD_CHUNK: usize = 64;

type SourceFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Source term `f`, acting on `u` through `∫_Ω f u dx`.
#[derive(Clone)]
pub struct Source<T> {
    eval: SourceFn<T>,
    label: String,
}

impl<T: Scalar> Source<T> {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::from_fn("0", |_| T::zero())
    }

    pub fn constant(c: T) -> Self {
        Self::from_fn(format!("{c}"), move |_| c)
    }

    /// `Σ_j c_j Π_k x_k^{e_jk}` from `(coefficient, exponents)` terms.
    pub fn polynomial(terms: Vec<(T, Vec<u32>)>) -> Self {
        let label = terms
            .iter()
            .map(|(c, e)| format!("{c}*x^{e:?}"))
            .collect::<Vec<_>>()
            .join(" + ");
        Self::from_fn(label, move |x| {
            terms
                .iter()
                .map(|(c, e)| {
                    e.iter()
                        .zip(x)
                        .fold(*c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
                })
                .sum()
        })
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        (self.eval)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Source({})", self.label)
    }
}

/// The functional being estimated.
#[derive(Debug, Clone)]
pub struct EnergySpec<T> {
    p: T,
    penalty: T,
    source: Source<T>,
    domain: Domain<T>,
}

impl<T: Scalar> EnergySpec<T> {
    pub fn new(p: T, penalty: T, source: Source<T>, domain: Domain<T>) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("exponent p = {p} must lie in (1, ∞)")));
        }
        if !(penalty >= T::zero()) || !penalty.is_finite() {
            return Err(Error::InvalidInput(format!("penalty {penalty} must be nonnegative")));
        }
        domain.validate()?;
        Ok(Self {
            p,
            penalty,
            source,
            domain,
        })
    }

    /// Dirichlet energy (`p = 2`).
    pub fn poisson(penalty: T, source: Source<T>, domain: Domain<T>) -> Result<Self> {
        Self::new(T::two(), penalty, source, domain)
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn penalty(&self) -> T {
        self.penalty
    }

    pub fn source(&self) -> &Source<T> {
        &self.source
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn with_penalty(&self, penalty: T) -> Result<Self> {
        Self::new(self.p, penalty, self.source.clone(), self.domain.clone())
    }

    fn is_quadratic(&self) -> bool {
        self.p == T::two()
    }

    /// `(1/p)|g|^p − f(x) u` evaluated on plain numbers.
    pub fn interior_integrand(&self, x: &[T], u: T, grad: &[T]) -> T {
        let g = if self.is_quadratic() {
            T::half() * crate::scalar::norm_sq(grad)
        } else {
            crate::scalar::norm_sq(grad).sqrt().powf(self.p) / self.p
        };
        g - self.source.eval(x) * u
    }

    /// Combines the boundary sum `measure · mean |u|^p` into the penalty `λ (·)^{2/p}`.
    fn penalty_from_mean_power(&self, integral: T) -> T {
        if self.is_quadratic() {
            self.penalty * integral
        } else {
            self.penalty * integral.powf(T::two() / self.p)
        }
    }
}

/// Result of [`estimate_total`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EnergyEstimate<T> {
    pub interior: T,
    pub penalty: T,
    /// `interior + penalty`.
    pub total: T,
    /// Standard error of the interior estimate (zero when computed alongside a gradient).
    pub interior_std_error: T,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

/// Records the interior integrand at one point (no quadrature weight).
pub fn record_interior_integrand<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    x: &[T],
) -> Result<Var> {
    let dual = autodiff::record_network(tape, vars, params, x)?;
    let grad_term = if spec.is_quadratic() {
        let sq = tape.dot(&dual.tangent, &dual.tangent, None);
        tape.scale(sq, T::half())
    } else {
        let mag = if dual.tangent.len() == 1 {
            dual.tangent[0]
        } else {
            tape.norm(&dual.tangent)
        };
        let pw = tape.pow_abs(mag, spec.p);
        tape.div_const(pw, spec.p)
    };
    let fx = spec.source.eval(x);
    if fx == T::zero() {
        Ok(grad_term)
    } else {
        let load = tape.scale(dual.primal, -fx);
        Ok(tape.add(grad_term, load))
    }
}

/// `weight · Σ_i [(1/p)|∇u(x_i)|^p − f(x_i) u(x_i)]` on the tape.
pub fn record_interior<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    batch: &SampleBatch<T>,
) -> Result<Var> {
    let terms = batch
        .iter()
        .map(|x| record_interior_integrand(tape, vars, params, spec, x))
        .collect::<Result<Vec<_>>>()?;
    let sum = tape.sum(&terms);
    let mean = tape.div_const(sum, T::from_usize_lossy(batch.len()));
    Ok(tape.scale(mean, batch.measure))
}

/// Boundary penalty `λ (weight · Σ_j |u(s_j)|^p)^{2/p}` on the tape.
pub fn record_penalty<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    batch: &SampleBatch<T>,
) -> Result<Var> {
    let terms = batch
        .iter()
        .map(|s| {
            let u = autodiff::record_value(tape, vars, params, s)?;
            Ok(if spec.is_quadratic() {
                tape.mul(u, u)
            } else {
                tape.pow_abs(u, spec.p)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = tape.sum(&terms);
    let mean = tape.div_const(sum, T::from_usize_lossy(batch.len()));
    let integral = tape.scale(mean, batch.measure);
    let shaped = if spec.is_quadratic() {
        integral
    } else {
        tape.pow_abs(integral, T::two() / spec.p)
    };
    Ok(tape.scale(shaped, spec.penalty))
}

/// Interior energy estimate for a given batch.
pub fn estimate_interior<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    batch: &SampleBatch<T>,
) -> Result<T> {
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params);
    let out = record_interior(&mut tape, &vars, params, spec, batch)?;
    tape.checked_value(out)
}

/// Boundary penalty estimate for a given batch.
pub fn estimate_penalty<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    batch: &SampleBatch<T>,
) -> Result<T> {
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params);
    let out = record_penalty(&mut tape, &vars, params, spec, batch)?;
    tape.checked_value(out)
}

/// Sub-seeds of the interior and boundary batches drawn by [`estimate_total`].
pub fn batch_seeds(seed: u64) -> (u64, u64) {
    (seed::derive(seed, 0), seed::derive(seed, 1))
}

/// Draws fresh interior/boundary batches and records the full objective on one tape.
pub fn record_total<T: Scalar>(
    tape: &mut Tape<T>,
    vars: &ParamVars,
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    interior: &SampleBatch<T>,
    boundary: &SampleBatch<T>,
) -> Result<Var> {
    let i = record_interior(tape, vars, params, spec, interior)?;
    let b = record_penalty(tape, vars, params, spec, boundary)?;
    Ok(tape.add(i, b))
}

fn std_error<T: Scalar>(values: &[T]) -> T {
    let n = T::from_usize_lossy(values.len());
    if values.len() < 2 {
        return T::zero();
    }
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one());
    (var / n).sqrt()
}

/// Monte-Carlo estimate of the full objective with `n` interior and `m`
/// boundary samples drawn from sub-seeds of `seed`.
pub fn estimate_total<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<EnergyEstimate<T>> {
    let (si, sb) = batch_seeds(seed);
    let interior = spec.domain.sample_interior(n, si);
    let boundary = spec.domain.sample_boundary(m, sb);
    let (est, _) = evaluate(params, spec, &interior, &boundary, false)?;
    Ok(EnergyEstimate { seed, ..est })
}

/// [`estimate_total`] together with its flat parameter gradient.
pub fn estimate_total_with_grad<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(EnergyEstimate<T>, Vec<T>)> {
    let (si, sb) = batch_seeds(seed);
    let interior = spec.domain.sample_interior(n, si);
    let boundary = spec.domain.sample_boundary(m, sb);
    let (est, grad) = evaluate(params, spec, &interior, &boundary, true)?;
    Ok((EnergyEstimate { seed, ..est }, grad))
}

/// Objective value (and optionally gradient) for fixed batches.
///
/// The interior sum is split into per-sample tapes merged in a fixed order;
/// the boundary penalty is recorded on a single tape because for `p ≠ 2` it
/// does not decompose over samples.
pub fn evaluate<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    interior: &SampleBatch<T>,
    boundary: &SampleBatch<T>,
    with_grad: bool,
) -> Result<(EnergyEstimate<T>, Vec<T>)> {
    let n = T::from_usize_lossy(interior.len());
    let points: Vec<&[T]> = interior.iter().collect();
    let (sum, mut grad, interior_std_error) = if with_grad {
        let (sum, grad) = autodiff::grad_params_sum(params, &points, GRAD_CHUNK, |tape, vars, x| {
            record_interior_integrand(tape, vars, params, spec, x)
        })?;
        (sum, grad, T::zero())
    } else {
        let values = points
            .iter()
            .map(|x| {
                let u = params.eval(x);
                let g = params.eval_gradient(x);
                spec.interior_integrand(x, u, &g)
            })
            .collect::<Vec<_>>();
        let scaled: Vec<T> = values.iter().map(|&v| v * interior.measure).collect();
        (values.iter().copied().sum(), Vec::new(), std_error(&scaled))
    };
    let interior_value = interior.measure * (sum / n);
    if !interior_value.is_finite() {
        return Err(Error::Numeric { index: 0, op: "interior" });
    }
    let scale = interior.measure / n;
    grad.iter_mut().for_each(|g| *g = *g * scale);

    let (penalty, pgrad) = if with_grad {
        autodiff::grad_params(params, |tape, vars| {
            record_penalty(tape, vars, params, spec, boundary)
        })?
    } else {
        (estimate_penalty(params, spec, boundary)?, Vec::new())
    };
    grad.iter_mut().zip(pgrad).for_each(|(a, b)| *a = *a + b);

    Ok((
        EnergyEstimate {
            interior: interior_value,
            penalty,
            total: interior_value + penalty,
            interior_std_error,
            n: interior.len(),
            m: boundary.len(),
            seed: interior.seed,
        },
        grad,
    ))
}

/// Interior/penalty/total split computed by [`quadrature_parts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts<T> {
    pub interior: T,
    pub penalty: T,
    pub total: T,
}

/// Smallest accepted grid resolution per axis for quadrature oracles.
pub const MIN_RESOLUTION: usize = 64;

/// Tensor-grid midpoint evaluation of the same functional, for validation only.
pub fn quadrature_energy<T: Scalar>(
    u: &dyn ScalarField<T>,
    spec: &EnergySpec<T>,
    resolution: usize,
) -> Result<T> {
    Ok(quadrature_parts(u, spec, resolution)?.total)
}

pub fn quadrature_parts<T: Scalar>(
    u: &dyn ScalarField<T>,
    spec: &EnergySpec<T>,
    resolution: usize,
) -> Result<EnergyParts<T>> {
    let d = spec.domain.dim();
    if d > 3 {
        return Err(Error::InvalidInput(format!(
            "quadrature limited to d <= 3 (got {d})"
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Resolution {
            given: resolution,
            required: MIN_RESOLUTION,
        });
    }
    let interior = spec
        .domain
        .interior_quadrature(resolution)
        .integrate(|x| spec.interior_integrand(x, u.value(x), &u.gradient(x)));
    let power = spec
        .domain
        .boundary_quadrature(resolution)?
        .integrate(|s| {
            let v = u.value(s);
            if spec.is_quadratic() {
                v * v
            } else {
                v.abs().powf(spec.p)
            }
        });
    let penalty = spec.penalty_from_mean_power(power);
    Ok(EnergyParts {
        interior,
        penalty,
        total: interior + penalty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::net::Layer;
    use std::f64::consts::PI;

    /// Hat with peak 1 at 0.5 on [0, 1]: 2ρ(x) − 4ρ(x − ½) + 2ρ(x − 1).
    fn hat() -> NetworkParams<f64> {
        NetworkParams::new(vec![
            Layer::from_rows(&[vec![1.0], vec![1.0], vec![1.0]], vec![0.0, -0.5, -1.0]).unwrap(),
            Layer::from_rows(&[vec![2.0, -4.0, 2.0]], vec![0.0]).unwrap(),
        ])
        .unwrap()
    }

    fn identity_1d() -> NetworkParams<f64> {
        NetworkParams::new(vec![Layer::from_rows(&[vec![1.0]], vec![0.0]).unwrap()]).unwrap()
    }

    #[test]
    fn rejects_bad_spec() {
        let dom = Domain::<f64>::unit_interval();
        assert!(EnergySpec::new(1.0, 1.0, Source::zero(), dom.clone()).is_err());
        assert!(EnergySpec::new(0.5, 1.0, Source::zero(), dom.clone()).is_err());
        assert!(EnergySpec::new(2.0, -1.0, Source::zero(), dom).is_err());
    }

    #[test]
    fn zero_network_has_zero_energy() {
        let spec = EnergySpec::poisson(3.0, Source::constant(5.0), Domain::unit_cube(2)).unwrap();
        let zero = NetworkParams::<f64>::zeros(&[2, 6, 6, 1]).unwrap();
        let est = estimate_total(&zero, &spec, 128, 32, 1).unwrap();
        assert_eq!((est.interior, est.penalty, est.total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hat_without_source_is_exact() {
        let spec = EnergySpec::poisson(0.0, Source::zero(), Domain::unit_interval()).unwrap();
        for (n, seed) in [(1000, 0), (777, 5), (4096, 9)] {
            let batch = spec.domain().sample_interior(n, seed);
            assert_eq!(estimate_interior(&hat(), &spec, &batch).unwrap(), 2.0);
        }
    }

    #[test]
    fn hat_with_unit_source_is_unbiased() {
        let spec = EnergySpec::poisson(0.0, Source::constant(1.0), Domain::unit_interval()).unwrap();
        let vals: Vec<f64> = (0..50)
            .map(|s| {
                let batch = spec.domain().sample_interior(1024, 100 + s);
                estimate_interior(&hat(), &spec, &batch).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / 50.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 49.0).sqrt();
        assert!((mean - 1.5).abs() <= 3.0 * sd / 50f64.sqrt(), "mean {mean}, sd {sd}");
    }

    #[test]
    fn penalty_examples() {
        let dom = Domain::<f64>::unit_interval();
        let b = dom.sample_boundary(10, 0);
        let off = EnergySpec::poisson(0.0, Source::zero(), dom.clone()).unwrap();
        assert_eq!(estimate_penalty(&hat(), &off, &b).unwrap(), 0.0);
        let one = EnergySpec::poisson(1.0, Source::zero(), dom.clone()).unwrap();
        assert_eq!(estimate_penalty(&identity_1d(), &one, &b).unwrap(), 1.0);
        let two = EnergySpec::poisson(2.0, Source::zero(), dom).unwrap();
        assert_eq!(estimate_penalty(&identity_1d(), &two, &b).unwrap(), 2.0);

        // constant c on the unit square: λ · perimeter · c²
        let c = 0.75;
        let constant = NetworkParams::new(vec![Layer::new(1, 2, vec![0.0, 0.0], vec![c]).unwrap()]).unwrap();
        let sq = EnergySpec::poisson(5.0, Source::zero(), Domain::unit_cube(2)).unwrap();
        for m in [1, 3, 17, 256] {
            let b = sq.domain().sample_boundary(m, m as u64);
            assert_eq!(estimate_penalty(&constant, &sq, &b).unwrap(), 5.0 * 4.0 * c * c);
        }
    }

    #[test]
    fn general_p_penalty_is_squared_norm() {
        // u = x on (0,1), p = 4: (|0|^4 + |1|^4)^{1/2} = 1
        let dom = Domain::<f64>::unit_interval();
        let spec = EnergySpec::new(4.0, 3.0, Source::zero(), dom.clone()).unwrap();
        let b = dom.sample_boundary(2, 0);
        assert_eq!(estimate_penalty(&identity_1d(), &spec, &b).unwrap(), 3.0);
        // u ≡ 2: (2·16)^{1/2} = √32
        let two = NetworkParams::new(vec![Layer::new(1, 1, vec![0.0], vec![2.0]).unwrap()]).unwrap();
        assert!((estimate_penalty(&two, &spec, &b).unwrap() - 3.0 * 32f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hat_total_with_large_penalty() {
        // zero trace, so the penalty vanishes whatever λ is
        let spec = EnergySpec::poisson(10.0, Source::constant(1.0), Domain::unit_interval()).unwrap();
        let est = estimate_total(&hat(), &spec, 4096, 2, 3).unwrap();
        assert_eq!(est.penalty, 0.0);
        assert!((est.total - 1.5).abs() < 4.0 * est.interior_std_error + 1e-12);
        assert_eq!(est.total, est.interior + est.penalty);
    }

    #[test]
    fn quadrature_oracles() {
        let sine = FnField {
            dim: 1,
            value: |x: &[f64]| (PI * x[0]).sin(),
            gradient: |x: &[f64]| vec![PI * (PI * x[0]).cos()],
        };
        let free = EnergySpec::poisson(1.0, Source::zero(), Domain::unit_interval()).unwrap();
        let e = quadrature_energy(&sine, &free, 4096).unwrap();
        assert!((e - PI * PI / 4.0).abs() <= 1e-6, "{e}");
        let loaded = EnergySpec::poisson(
            1.0,
            Source::from_fn("pi^2 sin", |x: &[f64]| PI * PI * (PI * x[0]).sin()),
            Domain::unit_interval(),
        )
        .unwrap();
        let e = quadrature_energy(&sine, &loaded, 4096).unwrap();
        assert!((e + PI * PI / 4.0).abs() <= 1e-6, "{e}");
        let zero = NetworkParams::<f64>::zeros(&[1, 4, 1]).unwrap();
        assert_eq!(quadrature_energy(&zero, &loaded, 64).unwrap(), 0.0);
        assert!(matches!(
            quadrature_energy(&zero, &loaded, 32),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn mc_agrees_with_quadrature_for_cpwl() {
        let spec = EnergySpec::poisson(
            2.0,
            Source::polynomial(vec![(1.0, vec![1, 0]), (-0.5, vec![0, 2])]),
            Domain::unit_cube(2),
        )
        .unwrap();
        let net = NetworkParams::<f64>::init(&[2, 6, 1], 21).unwrap();
        let exact = quadrature_parts(&net, &spec, 512).unwrap();
        let est = estimate_total(&net, &spec, 20_000, 4096, 8).unwrap();
        assert!((est.interior - exact.interior).abs() <= 3.0 * est.interior_std_error);
        assert!((est.penalty - exact.penalty).abs() <= 0.05 * exact.penalty.abs() + 1e-3);
    }
}
