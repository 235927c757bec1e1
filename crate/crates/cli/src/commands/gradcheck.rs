//! `gradcheck`: parameter gradients of the full Monte-Carlo objective
//! against central differences on the same batches.
//!
//! A parameter is excluded when any perturbed network changes some
//! activation pattern on the batch: the objective has a kink in between and
//! the difference quotient says nothing about the derivative.

use rayon::prelude::*;
use ritzkit::energy::{batch_seeds, estimate_total, estimate_total_with_grad, EnergySpec, Source};
use ritzkit::net::NetworkParams;
use ritzkit::{seed, Domain, Network};

use crate::config::{GradcheckSection, RunConfig};
use crate::output::{num, Table, NA};
use crate::Failure;

pub const HEADER: [&str; 11] = [
    "net", "seed", "dim", "depth", "width", "p", "params", "checked", "excluded",
    "max_rel_error", "worst_param",
];

/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

const WIDTHS: [usize; 4] = [3, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetCase {
    pub index: usize,
    pub seed: u64,
    pub dim: usize,
    pub depth: usize,
    pub width: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetReport {
    pub case: NetCase,
    pub params: usize,
    pub checked: usize,
    pub excluded: usize,
    pub max_rel_error: f64,
    pub worst_param: Option<usize>,
}

/// Cycles through d ∈ {1,2,3}, depth ∈ {2,3}, widths up to `max_width`
/// and p ∈ {2,3,4}. Domains: interval, square, ball.
pub fn suite(count: usize, max_width: usize, run_seed: u64) -> Vec<NetCase> {
    (0..count)
        .map(|i| NetCase {
            index: i,
            seed: seed::derive(run_seed, i as u64),
            dim: 1 + i % 3,
            depth: 2 + (i / 3) % 2,
            width: WIDTHS[(i / 2) % WIDTHS.len()].min(max_width.max(1)),
            p: [2.0, 2.0, 3.0, 2.0, 4.0][i % 5],
        })
        .collect()
}

fn domain(dim: usize) -> Domain {
    match dim {
        1 => Domain::unit_interval(),
        2 => Domain::unit_cube(2),
        _ => Domain::unit_ball(dim),
    }
}

pub fn check_net(
    case: NetCase,
    section: &GradcheckSection,
    inject_bug: bool,
) -> Result<NetReport, ritzkit::Error> {
    let domain = domain(case.dim);
    let (lo, hi) = domain.bounding_box();
    let arch = Network::rectangular_arch(case.dim, case.width, case.depth);
    let params = NetworkParams::init_in_box(&arch, &lo, &hi, case.seed)?;
    let source = Source::from_fn("1 + x0", |x: &[f64]| 1.0 + x[0]);
    let spec = EnergySpec::new(case.p, section.penalty, source, domain.clone())?;
    let eval_seed = seed::derive(case.seed, 1);
    let (n, m) = (section.n, section.m);
    let (_, mut grad) = estimate_total_with_grad(&params, &spec, n, m, eval_seed)?;
    if inject_bug {
        let k = argmax_abs(&grad);
        grad[k] = -grad[k];
    }

    // the exact batches the estimator draws
    let (si, sb) = batch_seeds(eval_seed);
    let interior = domain.sample_interior(n, si);
    let boundary = domain.sample_boundary(m, sb);
    let points: Vec<&[f64]> = interior.iter().chain(boundary.iter()).collect();
    let masks = |p: &Network| points.iter().map(|x| p.activation_masks(x)).collect::<Vec<_>>();
    let base = masks(&params);

    let flat = params.to_flat();
    let mut report = NetReport {
        case,
        params: flat.len(),
        checked: 0,
        excluded: 0,
        max_rel_error: 0.0,
        worst_param: None,
    };
    let mut shifted = params.clone();
    for (k, &g) in grad.iter().enumerate() {
        let h = section.step * flat[k].abs().max(1.0);
        let mut loss = |delta: f64| -> Result<Option<f64>, ritzkit::Error> {
            let mut f = flat.clone();
            f[k] += delta;
            shifted.set_flat(&f)?;
            if masks(&shifted) != base {
                return Ok(None);
            }
            Ok(Some(estimate_total(&shifted, &spec, n, m, eval_seed)?.total))
        };
        let (Some(p1), Some(m1), Some(p2), Some(m2)) = (loss(h)?, loss(-h)?, loss(2.0 * h)?, loss(-2.0 * h)?)
        else {
            report.excluded += 1;
            continue;
        };
        // fourth-order stencil: a large step keeps round-off small
        let fd = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(REL_FLOOR);
        report.checked += 1;
        if rel > report.max_rel_error || report.worst_param.is_none() {
            report.max_rel_error = rel;
            report.worst_param = Some(k);
        }
    }
    Ok(report)
}

fn argmax_abs(v: &[f64]) -> usize {
    (0..v.len())
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0)
}

pub fn run_suite(
    section: &GradcheckSection,
    run_seed: u64,
    inject_bug: bool,
) -> Result<Vec<NetReport>, Failure> {
    suite(section.nets, section.max_width, run_seed)
        .into_par_iter()
        .map(|case| check_net(case, section, inject_bug && case.index == 0).map_err(Failure::from))
        .collect()
}

pub fn run(config: &RunConfig, inject_bug: bool) -> Result<(), Failure> {
    let section = &config.gradcheck;
    if section.nets == 0 || section.n == 0 || section.m == 0 || !(section.step > 0.0) {
        return Err(Failure::Usage("gradcheck needs nets, n, m and step > 0".into()));
    }
    let reports = run_suite(section, config.seed(), inject_bug)?;
    let mut table = Table::create(&config.out.join("gradcheck.csv"), &HEADER)?;
    for r in &reports {
        let c = r.case;
        table.row([
            c.index.to_string(),
            c.seed.to_string(),
            c.dim.to_string(),
            c.depth.to_string(),
            c.width.to_string(),
            num(c.p),
            r.params.to_string(),
            r.checked.to_string(),
            r.excluded.to_string(),
            num(r.max_rel_error),
            r.worst_param.map_or(NA.into(), |k| k.to_string()),
        ])?;
    }
    table.finish()?;
    let excluded: usize = reports.iter().map(|r| r.excluded).sum();
    let worst = reports
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("at least one net");
    println!(
        "{} nets, {} parameters excluded at activation kinks; worst: net {} (seed {}) parameter {} relative error {:.3e}",
        reports.len(),
        excluded,
        worst.case.index,
        worst.case.seed,
        worst.worst_param.map_or(NA.into(), |k| k.to_string()),
        worst.max_rel_error
    );
    if worst.max_rel_error > section.tolerance {
        return Err(Failure::Check(format!(
            "relative error {:.3e} above {:.1e}",
            worst.max_rel_error, section.tolerance
        )));
    }
    Ok(())
}
