use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
    /// Adam on the hidden layers; the output layer is re-solved exactly on
    /// every batch (quadratic energies only, see [`solve_output_layer`]).
    ///
    /// [`solve_output_layer`]: super::solve_output_layer
    AdamGalerkin,
}

/// Optimizer settings. `beta1`, `beta2` and `eps` are ignored by SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Weight of the previous normal equations when `adam_galerkin` folds in
    /// a new batch (0 solves on the current batch alone).
    pub galerkin_memory: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            galerkin_memory: 0.9,
        }
    }
}

impl OptimizerConfig {
    /// `adam_galerkin` with the step size and memory used by the ladder
    /// presets. Heavy memory matters: a gradient taken at an output layer
    /// fitted to the same small batch favours features that fit its noise.
    pub fn galerkin() -> Self {
        Self {
            kind: OptimizerKind::AdamGalerkin,
            step_size: 3e-4,
            galerkin_memory: 0.99,
            ..Self::default()
        }
    }
}

/// First-order optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    config: OptimizerConfig,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let lr = T::lit(self.config.step_size);
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p = *p - lr * g;
                }
            }
            OptimizerKind::Adam | OptimizerKind::AdamGalerkin => {
                let b1 = T::lit(self.config.beta1);
                let b2 = T::lit(self.config.beta2);
                let eps = T::lit(self.config.eps);
                let c1 = T::one() - b1.powi(self.t);
                let c2 = T::one() - b2.powi(self.t);
                for ((p, &g), (m, v)) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    *m = b1 * *m + (T::one() - b1) * g;
                    *v = b2 * *v + (T::one() - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_adam_step_has_unit_magnitude() {
        // bias correction makes the first step ≈ lr · sign(g)
        let mut opt = Optimizer::<f64>::new(OptimizerConfig::default(), 2);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[10.0, -0.01]);
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (-1.0 + 1e-3)).abs() < 1e-6);
    }

    #[test]
    fn sgd_step() {
        let cfg = OptimizerConfig { kind: OptimizerKind::Sgd, step_size: 0.5, ..Default::default() };
        let mut opt = Optimizer::<f64>::new(cfg, 1);
        let mut p = vec![2.0];
        opt.step(&mut p, &[4.0]);
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let cfg = OptimizerConfig { step_size: 0.05, ..Default::default() };
        let mut opt = Optimizer::<f64>::new(cfg, 3);
        let target = [1.0, -2.0, 0.5];
        let mut p = vec![0.0; 3];
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            opt.step(&mut p, &g);
        }
        for (a, b) in p.iter().zip(&target) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
