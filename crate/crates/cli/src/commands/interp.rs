//! `interp`: W^{1,p} error of the Kuhn interpolant of the bump across mesh
//! widths, plus support containment at sampled exterior points.

use rand::Rng;
use rayon::prelude::*;
use ritzkit::pwl::{bump, bump_gradient, kuhn_interpolant, sobolev_error};
use ritzkit::seed;

use crate::config::{InterpSection, RunConfig};
use crate::output::{num, opt, Table};
use crate::Failure;

pub const HEADER: [&str; 9] = [
    "dim", "p", "delta", "resolution", "lp", "w1p", "ratio", "exterior_points",
    "support_violations",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dim: usize,
    pub p: f64,
    pub delta: f64,
    pub resolution: usize,
    pub lp: f64,
    pub w1p: f64,
    /// `w1p` over the previous row of the same `(dim, p)`.
    pub ratio: Option<f64>,
    pub exterior_points: usize,
    pub support_violations: usize,
}

/// Quadrature nodes per axis when none are configured.
fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 4096,
        2 => 512,
        _ => 96,
    }
}

fn one(section: &InterpSection, dim: usize, p: f64, delta: f64, s: u64) -> Result<SweepRow, Failure> {
    let lo = vec![-1.0; dim];
    let hi = vec![1.0; dim];
    let interp = kuhn_interpolant(bump, &lo, &hi, delta)?;
    let (blo, bhi) = interp.bounding_box();
    let widest = blo.iter().zip(&bhi).map(|(l, h)| h - l).fold(0.0, f64::max);
    let required = (4.0 * widest / delta).ceil() as usize;
    let resolution = section
        .resolution
        .unwrap_or_else(|| default_resolution(dim).max(required));
    let err = sobolev_error(bump, bump_gradient, &interp, p, resolution)?;

    // points farther than δ·√d from the unit ball, where the interpolant must vanish
    let reach = 1.0 + delta * (dim as f64).sqrt();
    let span = 1.0 + 3.0 * delta;
    let mut rng = seed::rng(s);
    let mut x = vec![0.0; dim];
    let (mut exterior, mut violations) = (0, 0);
    for _ in 0..section.exterior_points {
        for xk in x.iter_mut() {
            *xk = rng.random_range(-span..span);
        }
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > reach {
            exterior += 1;
            if interp.eval(&x) != 0.0 {
                violations += 1;
            }
        }
    }
    Ok(SweepRow {
        dim,
        p,
        delta,
        resolution,
        lp: err.lp,
        w1p: err.w1p,
        ratio: None,
        exterior_points: exterior,
        support_violations: violations,
    })
}

pub fn sweep(section: &InterpSection, run_seed: u64) -> Result<Vec<SweepRow>, Failure> {
    if section.fixture != "bump" {
        return Err(Failure::Usage(format!(
            "unknown interp fixture {:?}; available: bump",
            section.fixture
        )));
    }
    if section.deltas.is_empty() || section.p.is_empty() || section.dims.is_empty() {
        return Err(Failure::Usage("interp needs deltas, p and dims".into()));
    }
    if let Some(&d) = section.dims.iter().find(|&&d| d == 0 || d > 3) {
        return Err(Failure::Usage(format!("dim {d} outside 1..=3")));
    }
    let tasks: Vec<(usize, f64, usize, f64)> = section
        .dims
        .iter()
        .flat_map(|&d| {
            section.p.iter().flat_map(move |&p| {
                section.deltas.iter().enumerate().map(move |(i, &delta)| (d, p, i, delta))
            })
        })
        .collect();
    let mut rows: Vec<SweepRow> = tasks
        .par_iter()
        .map(|&(d, p, i, delta)| {
            one(section, d, p, delta, seed::derive(run_seed, (d * 100 + i) as u64))
        })
        .collect::<Result<_, _>>()?;
    let k = section.deltas.len();
    for chunk in rows.chunks_mut(k) {
        for i in 1..chunk.len() {
            chunk[i].ratio = Some(chunk[i].w1p / chunk[i - 1].w1p);
        }
    }
    Ok(rows)
}

/// First violated property: strict decrease of both errors, the ratio bound
/// and support containment.
pub fn first_violation(rows: &[SweepRow], max_ratio: f64) -> Option<String> {
    for (i, r) in rows.iter().enumerate() {
        let tag = format!("d = {}, p = {}, delta = {}", r.dim, r.p, r.delta);
        if r.support_violations > 0 {
            return Some(format!("{tag}: {} exterior points with nonzero value", r.support_violations));
        }
        if let Some(ratio) = r.ratio {
            let prev = &rows[i - 1];
            if !(r.w1p < prev.w1p && r.lp < prev.lp) {
                return Some(format!("{tag}: error did not decrease"));
            }
            if ratio > max_ratio {
                return Some(format!("{tag}: w1p ratio {ratio:.3} above {max_ratio}"));
            }
        }
    }
    None
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let section = &config.interp;
    let rows = sweep(section, config.seed())?;
    let mut table = Table::create(&config.out.join("interp.csv"), &HEADER)?;
    for r in &rows {
        table.row([
            r.dim.to_string(),
            num(r.p),
            num(r.delta),
            r.resolution.to_string(),
            num(r.lp),
            num(r.w1p),
            opt(r.ratio),
            r.exterior_points.to_string(),
            r.support_violations.to_string(),
        ])?;
        println!(
            "d {} p {} delta {}: lp {:.4e} w1p {:.4e}",
            r.dim, r.p, r.delta, r.lp, r.w1p
        );
    }
    table.finish()?;
    match first_violation(&rows, section.max_ratio) {
        Some(msg) => Err(Failure::Check(msg)),
        None => Ok(()),
    }
}
