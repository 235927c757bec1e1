//! Exact minimisation over the output layer for quadratic energies.
//!
//! For `p = 2` the sampled energy is a quadratic form in the output weights
//! `c` and output bias `c_0` of `u = Σ_j c_j φ_j + c_0`, where `φ_j` are the
//! last hidden activations:
//!
//! ```text
//! (A + 2λ B) c = r,   A_ij = ⟨∇φ_i, ∇φ_j⟩_Ω,  B_ij = ⟨φ_i, φ_j⟩_∂Ω,  r_i = ⟨f, φ_i⟩_Ω
//! ```
//!
//! with inner products given by the sample batches. Solving it every step
//! leaves only the hidden layers to the gradient method.

use nalgebra::{DMatrix, DVector};

use crate::energy::EnergySpec;
use crate::geometry::SampleBatch;
use crate::net::NetworkParams;
use crate::{Error, Result, Scalar};

/// Ridge added to the output system, relative to its mean diagonal.
pub const RIDGE: f64 = 1e-6;

/// Last hidden activations (plus a trailing constant 1) and their input
/// Jacobian, row-major `features × d`.
fn features<T: Scalar>(params: &NetworkParams<T>, x: &[T]) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let mut h: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let mut jac = vec![0.0; d * d];
    for k in 0..d {
        jac[k * d + k] = 1.0;
    }
    let layers = params.layers();
    for layer in &layers[..layers.len() - 1] {
        let (rows, cols) = (layer.rows(), layer.cols());
        let mut nh = vec![0.0; rows];
        let mut nj = vec![0.0; rows * d];
        for i in 0..rows {
            let row = layer.row(i);
            let z = row.iter().zip(&h).map(|(w, v)| w.as_f64() * v).sum::<f64>()
                + layer.bias()[i].as_f64();
            if z > 0.0 {
                nh[i] = z;
                for j in 0..cols {
                    let w = row[j].as_f64();
                    if w != 0.0 {
                        for k in 0..d {
                            nj[i * d + k] += w * jac[j * d + k];
                        }
                    }
                }
            }
        }
        h = nh;
        jac = nj;
    }
    h.push(1.0);
    jac.extend(std::iter::repeat_n(0.0, d));
    (h, jac)
}

/// Normal equations `(A + 2λB) c = r` of the output layer.
#[derive(Debug, Clone)]
pub struct OutputSystem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl OutputSystem {
    /// Assembles the system on the given batches.
    pub fn assemble<T: Scalar>(
        params: &NetworkParams<T>,
        spec: &EnergySpec<T>,
        interior: &SampleBatch<T>,
        boundary: &SampleBatch<T>,
    ) -> Result<Self> {
        if spec.p() != T::two() {
            return Err(Error::InvalidInput(format!(
                "output-layer solve needs p = 2, got p = {}",
                spec.p()
            )));
        }
        let d = params.input_dim();
        let w = params.layers().last().expect("nonempty").cols() + 1;
        let mut a = DMatrix::<f64>::zeros(w, w);
        let mut r = DVector::<f64>::zeros(w);

        let wi = interior.weight.as_f64();
        for x in interior.iter() {
            let (h, jac) = features(params, x);
            let f = spec.source().eval(x).as_f64();
            for i in 0..w {
                r[i] += wi * f * h[i];
                let gi = &jac[i * d..(i + 1) * d];
                if gi.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for j in i..w {
                    let gj = &jac[j * d..(j + 1) * d];
                    a[(i, j)] += wi * gi.iter().zip(gj).map(|(p, q)| p * q).sum::<f64>();
                }
            }
        }
        let wb = 2.0 * spec.penalty().as_f64() * boundary.weight.as_f64();
        for x in boundary.iter() {
            let (h, _) = features(params, x);
            for i in 0..w {
                if h[i] == 0.0 {
                    continue;
                }
                for j in i..w {
                    a[(i, j)] += wb * h[i] * h[j];
                }
            }
        }
        for i in 0..w {
            for j in 0..i {
                a[(i, j)] = a[(j, i)];
            }
        }
        Ok(Self { matrix: a, rhs: r })
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// `self ← β·self + (1−β)·other`.
    pub fn blend(&mut self, other: &Self, beta: f64) {
        assert_eq!(self.size(), other.size());
        self.matrix = &self.matrix * beta + &other.matrix * (1.0 - beta);
        self.rhs = &self.rhs * beta + &other.rhs * (1.0 - beta);
    }

    /// Solves the system and writes the result into the output layer of
    /// `params`. The relative ridge [`RIDGE`] damps near-coincident kinks
    /// and keeps dead units at zero.
    pub fn solve_into<T: Scalar>(&self, params: &mut NetworkParams<T>) -> Result<()> {
        let w = self.size();
        let out = params.layers_mut().last_mut().expect("nonempty");
        if out.cols() + 1 != w {
            return Err(Error::Shape(format!(
                "system of size {w} for an output layer with {} inputs",
                out.cols()
            )));
        }
        let mut a = self.matrix.clone();
        let ridge = RIDGE * a.trace() / w as f64 + 1e-14;
        for i in 0..w {
            a[(i, i)] += ridge;
        }
        let c = match a.clone().cholesky() {
            Some(ch) => ch.solve(&self.rhs),
            None => a
                .lu()
                .solve(&self.rhs)
                .ok_or(Error::Numeric { index: 0, op: "output_solve" })?,
        };
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { index: 0, op: "output_solve" });
        }
        for (dst, &src) in out.weights_mut().iter_mut().zip(c.iter()) {
            *dst = T::lit(src);
        }
        out.bias_mut()[0] = T::lit(c[w - 1]);
        Ok(())
    }
}

/// Replaces the output layer of `params` by the minimiser of the energy
/// sampled on the given batches.
pub fn solve_output_layer<T: Scalar>(
    params: &mut NetworkParams<T>,
    spec: &EnergySpec<T>,
    interior: &SampleBatch<T>,
    boundary: &SampleBatch<T>,
) -> Result<()> {
    OutputSystem::assemble(params, spec, interior, boundary)?.solve_into(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{evaluate, Source};
    use crate::geometry::Domain;

    #[test]
    fn solved_output_layer_is_stationary() {
        let spec = EnergySpec::poisson(
            50.0,
            Source::from_fn("x0*x1", |x: &[f64]| 1.0 + x[0] * x[1]),
            Domain::unit_cube(2),
        )
        .unwrap();
        let mut p = NetworkParams::<f64>::init(&[2, 12, 12, 1], 3).unwrap();
        let int = spec.domain().sample_interior(512, 1);
        let bnd = spec.domain().sample_boundary(128, 2);
        let before = evaluate(&p, &spec, &int, &bnd, false).unwrap().0.total;
        let system = OutputSystem::assemble(&p, &spec, &int, &bnd).unwrap();
        system.solve_into(&mut p).unwrap();
        let (est, grad) = evaluate(&p, &spec, &int, &bnd, true).unwrap();
        assert!(est.total < before);
        // stationary up to the ridge: ∇_c E = −ridge·c
        let ridge = RIDGE * system.matrix.trace() / 13.0 + 1e-14;
        let n = p.num_params();
        let c = &p.to_flat()[n - 13..];
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (g, c) in grad[n - 13..].iter().zip(c) {
            assert!((g + ridge * c).abs() <= 1e-9 * scale.max(1.0), "{g} vs {}", -ridge * c);
        }
    }

    #[test]
    fn rejects_non_quadratic_energy() {
        let spec = EnergySpec::new(4.0, 1.0, Source::zero(), Domain::unit_interval()).unwrap();
        let mut p = NetworkParams::<f64>::init(&[1, 4, 1], 0).unwrap();
        let int = spec.domain().sample_interior(8, 1);
        let bnd = spec.domain().sample_boundary(2, 2);
        assert!(solve_output_layer(&mut p, &spec, &int, &bnd).is_err());
    }
}
