//! Error measures against a manufactured solution.

use crate::energy::MIN_RESOLUTION;
use crate::field::ScalarField;
use crate::{Error, Result, Scalar};

use super::ManufacturedCase;

fn check(u: &dyn ScalarField<impl Scalar>, dim: usize, resolution: usize) -> Result<()> {
    if dim > 3 {
        return Err(Error::InvalidInput(format!("metrics limited to d <= 3 (got {dim})")));
    }
    if u.dim() != dim {
        return Err(Error::Shape(format!("field has dim {}, case has {dim}", u.dim())));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Resolution { given: resolution, required: MIN_RESOLUTION });
    }
    Ok(())
}

fn relative<T: Scalar>(err_sq: T, ref_sq: T) -> T {
    if ref_sq > T::zero() {
        (err_sq / ref_sq).sqrt()
    } else {
        err_sq.sqrt()
    }
}

/// `‖u − u*‖_{L²} / ‖u*‖_{L²}` by midpoint quadrature (absolute if `u* = 0`).
pub fn l2_error<T: Scalar>(
    u: &dyn ScalarField<T>,
    case: &ManufacturedCase<T>,
    resolution: usize,
) -> Result<T> {
    check(u, case.dim(), resolution)?;
    let q = case.domain.interior_quadrature(resolution);
    let (mut err, mut norm) = (T::zero(), T::zero());
    for (x, w) in q.iter() {
        let s = case.u_star(x);
        let e = u.value(x) - s;
        err = err + w * e * e;
        norm = norm + w * s * s;
    }
    Ok(relative(err, norm))
}

/// `‖∇u − ∇u*‖_{L²} / ‖∇u*‖_{L²}` by midpoint quadrature.
pub fn h1_seminorm_error<T: Scalar>(
    u: &dyn ScalarField<T>,
    case: &ManufacturedCase<T>,
    resolution: usize,
) -> Result<T> {
    check(u, case.dim(), resolution)?;
    let q = case.domain.interior_quadrature(resolution);
    let (mut err, mut norm) = (T::zero(), T::zero());
    for (x, w) in q.iter() {
        let gs = case.grad_u_star(x);
        let gu = u.gradient(x);
        for (a, b) in gu.iter().zip(&gs) {
            err = err + w * (*a - *b) * (*a - *b);
            norm = norm + w * *b * *b;
        }
    }
    Ok(relative(err, norm))
}

/// `final_loss − F_min`, or `None` when the minimum is unknown.
pub fn quasi_min_gap<T: Scalar>(final_loss: T, case: &ManufacturedCase<T>) -> Option<T> {
    case.f_min.map(|f| final_loss - f)
}

/// Mean of `u²` over the boundary, `∫_{∂Ω} u² / |∂Ω|`.
pub fn boundary_mean_square<T: Scalar>(
    u: &dyn ScalarField<T>,
    case: &ManufacturedCase<T>,
    resolution: usize,
) -> Result<T> {
    check(u, case.dim(), resolution)?;
    let q = case.domain.boundary_quadrature(resolution)?;
    Ok(q.integrate(|x| u.value(x) * u.value(x)) / case.domain.boundary_measure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetworkParams;
    use crate::pwl::{pwl_to_network_1d, Breakpoints1D};
    use crate::solve::{find_case, PWL_KNOTS};

    #[test]
    fn zero_network_has_unit_relative_error() {
        let case = find_case::<f64>("poisson_1d_sine").unwrap();
        let zero = NetworkParams::<f64>::zeros(&[1, 4, 1]).unwrap();
        assert!((l2_error(&zero, &case, 1000).unwrap() - 1.0).abs() < 1e-12);
        assert!((h1_seminorm_error(&zero, &case, 1000).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(boundary_mean_square(&zero, &case, 64).unwrap(), 0.0);
    }

    #[test]
    fn sine_norm() {
        // ‖sin(πx)‖ on (0,1) is 1/√2; the absolute error of u = 0 against it
        let case = find_case::<f64>("poisson_1d_sine").unwrap();
        let q = case.domain.interior_quadrature(4096);
        let norm = q.integrate(|x| case.u_star(x).powi(2)).sqrt();
        assert!((norm - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn exact_representation_has_zero_error() {
        let case = find_case::<f64>("poisson_1d_pwl").unwrap();
        let knots: Vec<f64> = (0..PWL_KNOTS).map(|i| i as f64 / 16.0).collect();
        let bp = Breakpoints1D::interpolate(knots, |x| (std::f64::consts::PI * x).sin()).unwrap();
        let net = pwl_to_network_1d(&bp).unwrap();
        // 1024 midpoints never land on a knot, where one-sided slopes differ
        assert!(l2_error(&net, &case, 1024).unwrap() <= 1e-10);
        assert!(h1_seminorm_error(&net, &case, 1024).unwrap() <= 1e-10);
    }

    #[test]
    fn refuses_coarse_grid_and_wrong_dim() {
        let case = find_case::<f64>("poisson_1d_sine").unwrap();
        let zero = NetworkParams::<f64>::zeros(&[1, 4, 1]).unwrap();
        assert!(matches!(l2_error(&zero, &case, 63), Err(Error::Resolution { .. })));
        let zero2 = NetworkParams::<f64>::zeros(&[2, 4, 1]).unwrap();
        assert!(matches!(l2_error(&zero2, &case, 64), Err(Error::Shape(_))));
    }

    #[test]
    fn gap() {
        let case = find_case::<f64>("poisson_1d_sine").unwrap();
        assert_eq!(quasi_min_gap(case.f_min.unwrap(), &case), Some(0.0));
        let pwl = find_case::<f64>("poisson_1d_pwl").unwrap();
        assert_eq!(quasi_min_gap(-1.0, &pwl), None);
    }
}
