//! The ladder experiment: width, penalty and tolerance refined together.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::estimate_total;
use crate::net::{default_depth, NetworkParams};
use crate::{seed, Error, Result, Scalar};

use super::{
    boundary_mean_square, h1_seminorm_error, l2_error, quasi_min_gap, train, ManufacturedCase,
    OptimizerConfig, Sampling, StopReason, TracePoint, TrainOptions,
};

/// One level `n` of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rung {
    pub width: usize,
    pub lambda: f64,
    pub delta: f64,
    pub max_steps: usize,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub rungs: Vec<Rung>,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Network depth; `None` uses `default_depth(d)`.
    pub depth: Option<usize>,
    pub window: usize,
    pub trace_every: usize,
    /// Training batches; the final loss estimate always uses i.i.d. samples.
    pub sampling: Sampling,
    /// Interior samples of the final loss estimate.
    pub eval_n: usize,
    /// Boundary samples of the final loss estimate.
    pub eval_m: usize,
    /// Quadrature points per axis for the error metrics.
    pub resolution: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            rungs: Self::schedule(3, 5000, 1024, 256),
            optimizer: OptimizerConfig::default(),
            seed: 0,
            depth: None,
            window: 200,
            trace_every: 50,
            sampling: Sampling::Iid,
            eval_n: 16384,
            eval_m: 4096,
            resolution: 256,
        }
    }
}

impl LadderConfig {
    /// Defaults tuned per case: the output-solving optimizer with stratified
    /// batches for quadratic energies, plain Adam otherwise.
    pub fn for_case<T: Scalar>(case: &ManufacturedCase<T>) -> Self {
        let mut config = Self::default();
        if case.p == T::two() {
            config.optimizer = OptimizerConfig::galerkin();
            config.sampling = Sampling::Stratified;
        }
        config
    }

    /// Rungs `n = 1..=count` with width `2^{n+2}`, `λ = 10^n`, `δ = 10^{−n−1}`.
    pub fn schedule(count: usize, max_steps: usize, n: usize, m: usize) -> Vec<Rung> {
        (1..=count as i32)
            .map(|k| Rung {
                width: 1 << (k + 2),
                lambda: 10f64.powi(k),
                delta: 10f64.powi(-k - 1),
                max_steps,
                n,
                m,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.rungs.is_empty() {
            return bad("ladder needs at least one rung".into());
        }
        for (i, r) in self.rungs.iter().enumerate() {
            if r.width == 0 || r.n == 0 || r.m == 0 {
                return bad(format!("rung {i}: width, n and m must be positive"));
            }
            if !(r.lambda >= 0.0 && r.lambda.is_finite()) {
                return bad(format!("rung {i}: lambda must be finite and >= 0"));
            }
            if !(r.delta > 0.0 && r.delta.is_finite()) {
                return bad(format!("rung {i}: delta must be finite and > 0"));
            }
        }
        for (i, w) in self.rungs.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if !(b.lambda > a.lambda) {
                return bad(format!("lambda must increase strictly (rungs {i}, {})", i + 1));
            }
            if b.width < a.width {
                return bad(format!("width must not decrease (rungs {i}, {})", i + 1));
            }
            if !(b.delta < a.delta) {
                return bad(format!("delta must decrease strictly (rungs {i}, {})", i + 1));
            }
        }
        if self.depth == Some(0) {
            return bad("depth must be at least 1".into());
        }
        if self.window == 0 || self.trace_every == 0 || self.eval_n < 2 || self.eval_m == 0 {
            return bad("window, trace_every, eval_n and eval_m must be positive".into());
        }
        Ok(())
    }
}

/// Result of one rung.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct RungReport<T> {
    pub case: String,
    pub rung: usize,
    pub width: usize,
    pub depth: usize,
    pub lambda: f64,
    pub delta: f64,
    pub steps: usize,
    pub stop: StopReason,
    /// Penalized loss of the returned parameters on an independent large batch.
    pub loss: T,
    pub loss_std_error: T,
    pub l2_error: T,
    pub h1_error: T,
    pub quasi_min_gap: Option<T>,
    /// Mean of `u²` over the boundary.
    pub boundary_ms: T,
    pub seconds: f64,
    pub trace: Vec<TracePoint<T>>,
}

pub struct LadderOutcome<T> {
    pub reports: Vec<RungReport<T>>,
    pub params: NetworkParams<T>,
}

/// Trains one network per rung, each warm-started from the previous one.
pub fn gamma_ladder<T: Scalar>(
    case: &ManufacturedCase<T>,
    config: &LadderConfig,
) -> Result<LadderOutcome<T>> {
    gamma_ladder_with(case, config, |_| {})
}

/// [`gamma_ladder`] with a callback invoked as each report is produced.
pub fn gamma_ladder_with<T: Scalar>(
    case: &ManufacturedCase<T>,
    config: &LadderConfig,
    mut on_rung: impl FnMut(&RungReport<T>),
) -> Result<LadderOutcome<T>> {
    config.validate()?;
    let d = case.dim();
    let depth = config.depth.unwrap_or_else(|| default_depth(d));
    let (lo, hi) = case.domain.bounding_box();
    let mut params: Option<NetworkParams<T>> = None;
    let mut reports = Vec::with_capacity(config.rungs.len());

    for (k, rung) in config.rungs.iter().enumerate() {
        let start = Instant::now();
        let arch = NetworkParams::<T>::rectangular_arch(d, rung.width, depth);
        let init_seed = seed::derive(config.seed, 3 * k as u64);
        let fresh = NetworkParams::init_in_box(&arch, &lo, &hi, init_seed)?;
        let p0 = match &params {
            None => fresh,
            Some(prev) => prev.widen_into(fresh)?,
        };
        let spec = case.energy(T::lit(rung.lambda))?;
        let options = TrainOptions {
            n: rung.n,
            m: rung.m,
            window: config.window,
            trace_every: config.trace_every,
            sampling: config.sampling,
        };
        let out = train(
            &p0,
            &spec,
            &config.optimizer,
            T::lit(rung.delta),
            rung.max_steps,
            seed::derive(config.seed, 3 * k as u64 + 1),
            &options,
        )?;
        let eval = estimate_total(
            &out.params,
            &spec,
            config.eval_n,
            config.eval_m,
            seed::derive(config.seed, 3 * k as u64 + 2),
        )?;
        let report = RungReport {
            case: case.name.clone(),
            rung: k,
            width: rung.width,
            depth,
            lambda: rung.lambda,
            delta: rung.delta,
            steps: out.steps,
            stop: out.stop,
            loss: eval.total,
            loss_std_error: eval.interior_std_error,
            l2_error: l2_error(&out.params, case, config.resolution)?,
            h1_error: h1_seminorm_error(&out.params, case, config.resolution)?,
            quasi_min_gap: quasi_min_gap(eval.total, case),
            boundary_ms: boundary_mean_square(&out.params, case, config.resolution)?,
            seconds: start.elapsed().as_secs_f64(),
            trace: out.trace,
        };
        on_rung(&report);
        reports.push(report);
        params = Some(out.params);
    }
    Ok(LadderOutcome { reports, params: params.expect("at least one rung") })
}
