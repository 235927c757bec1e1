//! Plateau-stopped stochastic minimisation of the penalized energy.

use serde::{Deserialize, Serialize};

use crate::energy::{batch_seeds, estimate_total, evaluate, EnergySpec};
use crate::net::NetworkParams;
use crate::{seed, Error, Result, Scalar};

use super::{solve_output_layer, Optimizer, OptimizerConfig, OptimizerKind, OutputSystem};

/// Batch size multiple for the closing output fit of `adam_galerkin`.
const POLISH: usize = 16;

/// How training batches are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Independent uniform points, as in [`estimate_total`].
    #[default]
    Iid,
    /// Jittered grids (see [`Domain::sample_interior_stratified`]); batch sizes
    /// are rounded up to full grids.
    ///
    /// [`Domain::sample_interior_stratified`]: crate::geometry::Domain::sample_interior_stratified
    Stratified,
}

/// Sampling and bookkeeping knobs of [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    /// Interior samples per step.
    pub n: usize,
    /// Boundary samples per step (ignored in 1-D, where the boundary is two points).
    pub m: usize,
    /// Moving-average window of the plateau test.
    pub window: usize,
    /// Keep every `trace_every`-th loss in the returned trace.
    pub trace_every: usize,
    pub sampling: Sampling,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { n: 1024, m: 256, window: 200, trace_every: 50, sampling: Sampling::Iid }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Plateau,
    MaxSteps,
}

/// One subsampled point of the loss history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct TracePoint<T> {
    pub step: usize,
    pub loss: T,
    /// Lowest trailing-window mean seen up to and including `step`.
    pub best: T,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters at the step with the lowest trailing-window mean loss.
    pub params: NetworkParams<T>,
    /// That mean.
    pub best_loss: T,
    pub best_step: usize,
    /// Optimizer steps taken.
    pub steps: usize,
    pub stop: StopReason,
    pub trace: Vec<TracePoint<T>>,
}

/// Runs the optimizer on fresh batches (seeded by `derive(seed, step)`) until
/// the mean loss of the latest `window` steps improves on the previous window
/// by less than `delta`, or `max_steps` is reached. The test runs once per
/// completed window.
///
/// Single-batch losses are too noisy to rank iterates (their spread is far
/// larger than late-stage progress), so "best" is judged by the mean over the
/// trailing window, or over all steps so far during the first window.
pub fn train<T: Scalar>(
    params0: &NetworkParams<T>,
    spec: &EnergySpec<T>,
    optimizer: &OptimizerConfig,
    delta: T,
    max_steps: usize,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainOutcome<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    if options.window == 0 || options.trace_every == 0 || options.n == 0 || options.m == 0 {
        return Err(Error::InvalidInput("window, trace_every, n and m must be positive".into()));
    }
    if params0.input_dim() != spec.domain().dim() {
        return Err(Error::Shape(format!(
            "network input dim {} vs domain dim {}",
            params0.input_dim(),
            spec.domain().dim()
        )));
    }
    let galerkin = optimizer.kind == OptimizerKind::AdamGalerkin;
    if galerkin && !(0.0..1.0).contains(&optimizer.galerkin_memory) {
        return Err(Error::InvalidInput(format!(
            "galerkin_memory must lie in [0, 1), got {}",
            optimizer.galerkin_memory
        )));
    }
    if galerkin && spec.p() != T::two() {
        return Err(Error::InvalidInput(
            "adam_galerkin needs a quadratic energy (p = 2)".into(),
        ));
    }
    if max_steps == 0 {
        let est = estimate_total(params0, spec, options.n, options.m, seed::derive(seed, 0))?;
        return Ok(TrainOutcome {
            params: params0.clone(),
            best_loss: est.total,
            best_step: 0,
            steps: 0,
            stop: StopReason::MaxSteps,
            trace: Vec::new(),
        });
    }

    let mut params = params0.clone();
    let mut flat = params.to_flat();
    // with the output solve, only the hidden layers are left to the optimizer
    let trained = if galerkin {
        flat.len() - params.layers().last().expect("nonempty").num_params()
    } else {
        flat.len()
    };
    let mut opt = Optimizer::new(*optimizer, trained);
    let mut best = (T::infinity(), 0, params.clone());
    let mut losses: Vec<T> = Vec::with_capacity(max_steps);
    let mut running = T::zero();
    let mut system: Option<OutputSystem> = None;
    let mut trace = Vec::new();
    let w = options.window;
    let mut stop = StopReason::MaxSteps;

    for step in 0..max_steps {
        let batch_seed = seed::derive(seed, step as u64);
        let diverged = |loss: f64, p: &NetworkParams<T>| Error::Diverged {
            step,
            loss,
            param_norm: p.param_norm().as_f64(),
        };
        let (si, sb) = batch_seeds(batch_seed);
        let domain = spec.domain();
        let (interior, boundary) = match options.sampling {
            Sampling::Iid => (domain.sample_interior(options.n, si), domain.sample_boundary(options.m, sb)),
            Sampling::Stratified => (
                domain.sample_interior_stratified(options.n, si),
                domain.sample_boundary_stratified(options.m, sb),
            ),
        };
        // With the output solve, the loss is taken before fitting the output
        // layer to this batch: the fitted value is biased low and can be
        // arbitrarily so when a direction is invisible to the samples.
        let evaluated = if galerkin {
            evaluate(&params, spec, &interior, &boundary, false).and_then(|(before, _)| {
                let evaluated_at = params.clone();
                let batch = OutputSystem::assemble(&params, spec, &interior, &boundary)?;
                match &mut system {
                    Some(sys) => sys.blend(&batch, optimizer.galerkin_memory),
                    None => system = Some(batch),
                }
                system.as_ref().expect("assembled").solve_into(&mut params)?;
                let (_, grad) = evaluate(&params, spec, &interior, &boundary, true)?;
                Ok((before, grad, Some(evaluated_at)))
            })
        } else {
            evaluate(&params, spec, &interior, &boundary, true).map(|(e, g)| (e, g, None))
        };
        let (est, grad, evaluated_at) = match evaluated {
            Ok(v) => v,
            Err(e) if e.is_numeric() => return Err(diverged(f64::NAN, &params)),
            Err(e) => return Err(e),
        };
        let loss = est.total;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(diverged(loss.as_f64(), &params));
        }
        losses.push(loss);
        running = running + loss;
        if losses.len() > w {
            running = running - losses[losses.len() - 1 - w];
        }
        let smoothed = running / T::from_usize_lossy(losses.len().min(w));
        if smoothed < best.0 {
            best = (smoothed, step, evaluated_at.unwrap_or_else(|| params.clone()));
        }
        if step % options.trace_every == 0 || step + 1 == max_steps {
            trace.push(TracePoint { step, loss, best: best.0 });
        }

        let done = step + 1;
        if done >= 2 * w && done % w == 0 {
            let mean = |s: &[T]| s.iter().copied().sum::<T>() / T::from_usize_lossy(s.len());
            let prev = mean(&losses[done - 2 * w..done - w]);
            let cur = mean(&losses[done - w..done]);
            if prev - cur < delta {
                stop = StopReason::Plateau;
                if trace.last().map(|t| t.step) != Some(step) {
                    trace.push(TracePoint { step, loss, best: best.0 });
                }
                break;
            }
        }

        flat = params.to_flat();
        opt.step(&mut flat[..trained], &grad[..trained]);
        params.set_flat(&flat)?;
    }

    let mut params = best.2;
    if galerkin {
        // a last output fit on a larger independent batch removes the
        // per-batch noise left in the output layer
        let (si, sb) = batch_seeds(seed::derive(seed, u64::MAX));
        let domain = spec.domain();
        let interior = domain.sample_interior_stratified(POLISH * options.n, si);
        let boundary = domain.sample_boundary_stratified(POLISH * options.m, sb);
        solve_output_layer(&mut params, spec, &interior, &boundary).map_err(|e| {
            if e.is_numeric() {
                Error::Diverged { step: losses.len(), loss: f64::NAN, param_norm: params.param_norm().as_f64() }
            } else {
                e
            }
        })?;
    }

    Ok(TrainOutcome {
        params,
        best_loss: best.0,
        best_step: best.1,
        steps: losses.len(),
        stop,
        trace,
    })
}
