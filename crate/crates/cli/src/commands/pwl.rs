//! `pwl`: exact CPWL constructions against direct evaluation.

use rand::Rng;
use ritzkit::net::{Layer, NetworkParams};
use ritzkit::pwl::{max_tree_depth, pwl_to_network_1d, relu_max, relu_min};
use ritzkit::{seed, Breakpoints1D, Network};

use crate::config::{PwlSection, RunConfig};
use crate::output::num;
use crate::output::Table;
use crate::Failure;

pub const HEADER: [&str; 7] =
    ["fixture", "dim", "points", "depth", "declared_depth", "max_abs_dev", "max_rel_dev"];

/// Deviations are measured as `|net − oracle| / (1 + |oracle|)`.
pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRow {
    pub fixture: String,
    pub dim: usize,
    pub points: usize,
    pub depth: usize,
    pub declared_depth: usize,
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
}

impl FixtureRow {
    pub fn passes(&self) -> bool {
        self.depth == self.declared_depth && self.max_rel_dev <= TOLERANCE
    }
}

#[allow(clippy::too_many_arguments)]
fn compare(
    fixture: &str,
    net: &Network,
    declared_depth: usize,
    oracle: impl Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    points: usize,
    point_seed: u64,
) -> FixtureRow {
    let mut rng = seed::rng(point_seed);
    let mut x = vec![0.0; lo.len()];
    let (mut abs, mut rel) = (0.0f64, 0.0f64);
    for _ in 0..points {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = rng.random_range(lo[k]..hi[k]);
        }
        let want = oracle(&x);
        let dev = (net.eval(&x) - want).abs();
        abs = abs.max(dev);
        rel = rel.max(dev / (1.0 + want.abs()));
    }
    FixtureRow {
        fixture: fixture.into(),
        dim: lo.len(),
        points,
        depth: net.depth(),
        declared_depth,
        max_abs_dev: abs,
        max_rel_dev: rel,
    }
}

/// Depth of `pwl_to_network_1d`: `⌈log₂(1+1)⌉ + 1`.
pub const DEPTH_1D: usize = 2;

pub fn breakpoints_row(name: &str, bp: &Breakpoints1D, points: usize, point_seed: u64) -> Result<FixtureRow, Failure> {
    let net = pwl_to_network_1d(bp)?;
    let knots = bp.knots();
    let (a, b) = (knots[0], knots[knots.len() - 1]);
    let margin = 0.5 * (b - a).max(1.0);
    Ok(compare(name, &net, DEPTH_1D, |x| bp.eval(x[0]), &[a - margin], &[b + margin], points, point_seed))
}

/// `k` random affine maps on `[−1, 1]^dim`, as depth-1 networks.
pub fn random_affines(k: usize, dim: usize, s: u64) -> Vec<Network> {
    let mut rng = seed::rng(s);
    (0..k)
        .map(|_| {
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            NetworkParams::new(vec![Layer::new(1, dim, w, vec![b]).expect("shape")]).expect("net")
        })
        .collect()
}

pub fn affine_rows(k: usize, dim: usize, points: usize, s: u64) -> Result<Vec<FixtureRow>, Failure> {
    if k == 0 || dim == 0 {
        return Err(Failure::Usage("affines and dim must be positive".into()));
    }
    let pieces = random_affines(k, dim, seed::derive(s, 0));
    let eval = |x: &[f64]| pieces.iter().map(|p| p.eval(x)).collect::<Vec<_>>();
    let declared = max_tree_depth(&vec![1; k]);
    let (lo, hi) = (vec![-1.0; dim], vec![1.0; dim]);
    let mx = relu_max(&pieces)?;
    let mn = relu_min(&pieces)?;
    Ok(vec![
        compare(
            &format!("max_of_{k}_affine"),
            &mx,
            declared,
            |x| eval(x).into_iter().fold(f64::NEG_INFINITY, f64::max),
            &lo,
            &hi,
            points,
            seed::derive(s, 1),
        ),
        compare(
            &format!("min_of_{k}_affine"),
            &mn,
            declared,
            |x| eval(x).into_iter().fold(f64::INFINITY, f64::min),
            &lo,
            &hi,
            points,
            seed::derive(s, 2),
        ),
    ])
}

pub fn rows(section: &PwlSection, run_seed: u64) -> Result<Vec<FixtureRow>, Failure> {
    let mut rows = Vec::new();
    if section.hat == Some(true) {
        let hat = Breakpoints1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0], 0.0, 0.0)?;
        rows.push(breakpoints_row("hat", &hat, section.points, seed::derive(run_seed, 10))?);
    }
    match (&section.knots, &section.values) {
        (Some(k), Some(v)) => {
            let bp = Breakpoints1D::new(k.clone(), v.clone(), section.left_slope, section.right_slope)?;
            rows.push(breakpoints_row("breakpoints", &bp, section.points, seed::derive(run_seed, 11))?);
        }
        (None, None) => {}
        _ => return Err(Failure::Usage("knots and values must be given together".into())),
    }
    if let Some(k) = section.affines {
        rows.extend(affine_rows(k, section.dim, section.points, seed::derive(run_seed, 12))?);
    }
    Ok(rows)
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let rows = rows(&config.pwl, config.seed())?;
    let mut table = Table::create(&config.out.join("pwl.csv"), &HEADER)?;
    for r in &rows {
        table.row([
            r.fixture.clone(),
            r.dim.to_string(),
            r.points.to_string(),
            r.depth.to_string(),
            r.declared_depth.to_string(),
            num(r.max_abs_dev),
            num(r.max_rel_dev),
        ])?;
        println!(
            "{}: depth {} (declared {}), max abs deviation {:.3e} over {} points",
            r.fixture, r.depth, r.declared_depth, r.max_abs_dev, r.points
        );
    }
    table.finish()?;
    match rows.iter().find(|r| !r.passes()) {
        Some(r) => Err(Failure::Check(format!(
            "{}: depth {} vs {}, relative deviation {:.3e}",
            r.fixture, r.depth, r.declared_depth, r.max_rel_dev
        ))),
        None => Ok(()),
    }
}
