use crate::field::ScalarField;
use crate::net::{Layer, NetworkParams};
use crate::{Error, Result, Scalar};

/// Continuous piecewise linear function of one variable: interpolates
/// `(knot_i, value_i)` and extends affinely with the given outer slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints1D<T> {
    knots: Vec<T>,
    values: Vec<T>,
    left_slope: T,
    right_slope: T,
}

impl<T: Scalar> Breakpoints1D<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>, left_slope: T, right_slope: T) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} knots with {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "knots must be strictly increasing (no duplicates)".into(),
            ));
        }
        if knots
            .iter()
            .chain(&values)
            .chain([&left_slope, &right_slope])
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite breakpoint data".into()));
        }
        Ok(Self {
            knots,
            values,
            left_slope,
            right_slope,
        })
    }

    /// The affine function `slope·x + intercept`, stored as a single knot at 0.
    pub fn affine(slope: T, intercept: T) -> Self {
        Self {
            knots: vec![T::zero()],
            values: vec![intercept],
            left_slope: slope,
            right_slope: slope,
        }
    }

    /// Interpolant of `f` at the given knots, constant extension outside.
    pub fn interpolate(knots: Vec<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = knots.iter().map(|&x| f(x)).collect();
        Self::new(knots, values, T::zero(), T::zero())
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Slopes of all pieces from left to right: `left, s_0, ..., s_{k-1}, right`.
    pub fn slopes(&self) -> Vec<T> {
        let mut s = Vec::with_capacity(self.knots.len() + 1);
        s.push(self.left_slope);
        for i in 0..self.knots.len() - 1 {
            s.push(
                (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]),
            );
        }
        s.push(self.right_slope);
        s
    }

    /// Direct evaluation by locating the piece containing `x`.
    pub fn eval(&self, x: T) -> T {
        let k = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] + self.left_slope * (x - self.knots[0]);
        }
        if x >= self.knots[k - 1] {
            return self.values[k - 1] + self.right_slope * (x - self.knots[k - 1]);
        }
        let i = self.knots.partition_point(|&t| t <= x) - 1;
        let t = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Slope of the piece containing `x` (right-continuous at knots).
    pub fn slope(&self, x: T) -> T {
        let i = self.knots.partition_point(|&t| t <= x);
        self.slopes()[i]
    }
}

impl<T: Scalar> ScalarField<T> for Breakpoints1D<T> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[T]) -> T {
        self.eval(x[0])
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![self.slope(x[0])]
    }
}

/// Depth-2 network computing the CPWL function exactly:
///
/// `u(x) = v_0 + s_L (x − x_0) + Σ_i (s_i − s_{i−1}) ρ(x − x_i)`
///
/// with the affine part realised as `s_L (ρ(x) − ρ(−x))`. Knots without a
/// slope change contribute no unit.
pub fn pwl_to_network_1d<T: Scalar>(bp: &Breakpoints1D<T>) -> Result<NetworkParams<T>> {
    // (input weight, bias, output weight)
    let mut units: Vec<(T, T, T)> = Vec::new();
    let left = bp.left_slope;
    if left != T::zero() {
        units.push((T::one(), T::zero(), left));
        units.push((-T::one(), T::zero(), -left));
    }
    let slopes = bp.slopes();
    for (i, &x) in bp.knots.iter().enumerate() {
        let jump = slopes[i + 1] - slopes[i];
        if jump != T::zero() {
            units.push((T::one(), -x, jump));
        }
    }
    if units.is_empty() {
        units.push((T::zero(), T::zero(), T::zero()));
    }
    let hidden = Layer::new(
        units.len(),
        1,
        units.iter().map(|u| u.0).collect(),
        units.iter().map(|u| u.1).collect(),
    )?;
    let output = Layer::new(
        1,
        units.len(),
        units.iter().map(|u| u.2).collect(),
        vec![bp.values[0] - left * bp.knots[0]],
    )?;
    NetworkParams::new(vec![hidden, output])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_knots() {
        assert!(Breakpoints1D::new(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.0], 0.0, 0.0).is_err());
        assert!(Breakpoints1D::new(vec![0.0, 1.0], vec![0.0], 0.0, 0.0).is_err());
        assert!(Breakpoints1D::<f64>::new(vec![], vec![], 0.0, 0.0).is_err());
    }

    #[test]
    fn direct_evaluation() {
        let hat = Breakpoints1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0], 0.0, 0.0).unwrap();
        assert_eq!(hat.eval(0.25), 0.5);
        assert_eq!(hat.eval(0.5), 1.0);
        assert_eq!(hat.eval(-3.0), 0.0);
        assert_eq!(hat.eval(7.0), 0.0);
        assert_eq!(hat.slope(0.25), 2.0);
        assert_eq!(hat.slope(0.75), -2.0);
        assert_eq!(hat.slopes(), vec![0.0, 2.0, -2.0, 0.0]);
    }

    #[test]
    fn hat_network() {
        let hat = Breakpoints1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0], 0.0, 0.0).unwrap();
        let net = pwl_to_network_1d(&hat).unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.layers()[0].rows(), 3);
        for k in 0..=200 {
            let x = -0.5 + k as f64 / 100.0;
            assert!((net.eval(&[x]) - hat.eval(x)).abs() <= 1e-12 * (1.0 + hat.eval(x).abs()));
        }
    }

    #[test]
    fn affine_piece_has_no_knot_units() {
        let line = Breakpoints1D::affine(-1.5, 0.25);
        let net = pwl_to_network_1d(&line).unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.layers()[0].rows(), 2); // ρ(x), ρ(−x)
        for x in [-4.0, -0.1, 0.0, 0.3, 9.0] {
            assert_eq!(net.eval(&[x]), -1.5 * x + 0.25);
        }
        let flat = pwl_to_network_1d(&Breakpoints1D::affine(0.0, 3.0)).unwrap();
        assert_eq!(flat.eval(&[12.0]), 3.0);
    }

    #[test]
    fn outer_slopes_are_kept() {
        let bp = Breakpoints1D::new(vec![-1.0, 2.0], vec![1.0, -2.0], 0.5, 3.0).unwrap();
        let net = pwl_to_network_1d(&bp).unwrap();
        for x in [-10.0f64, -1.0, 0.0, 2.0, 5.5] {
            assert!((net.eval(&[x]) - bp.eval(x)).abs() < 1e-12 * (1.0 + bp.eval(x).abs()));
        }
    }
}
