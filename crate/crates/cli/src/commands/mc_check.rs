//! `mc-check`: spread of the interior energy estimator across seeds.

use rayon::prelude::*;
use ritzkit::energy::{estimate_interior, Source};
use ritzkit::pwl::pwl_to_network_1d;
use ritzkit::{seed, Breakpoints1D, Domain, EnergySpec, Network};

use crate::config::RunConfig;
use crate::output::{num, opt, Table};
use crate::Failure;

pub const HEADER: [&str; 9] = [
    "case", "n", "seeds", "mean", "std_error", "mean_std_error", "exact", "z", "se_ratio",
];

pub const CASES: [&str; 1] = ["hat_energy"];

/// A network with an exactly known interior energy.
pub struct Fixture {
    pub net: Network,
    pub spec: EnergySpec,
    pub exact: f64,
}

/// Hat at 0.5 on (0, 1) with f ≡ 1: `½∫|u'|² − ∫u = 2 − ½ = 1.5`.
pub fn hat_energy() -> Fixture {
    let hat = Breakpoints1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0], 0.0, 0.0)
        .expect("valid hat");
    Fixture {
        net: pwl_to_network_1d(&hat).expect("hat compiles"),
        spec: EnergySpec::poisson(0.0, Source::constant(1.0), Domain::unit_interval())
            .expect("valid spec"),
        exact: 1.5,
    }
}

pub fn fixture(name: &str) -> Result<Fixture, Failure> {
    match name {
        "hat_energy" => Ok(hat_energy()),
        other => Err(Failure::Usage(format!(
            "unknown mc-check case {other:?}; available: {}",
            CASES.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub n: usize,
    pub seeds: usize,
    pub mean: f64,
    /// Sample standard deviation of one estimate across seeds.
    pub std_error: f64,
    pub mean_std_error: f64,
    pub exact: f64,
    pub z: f64,
}

/// Interior estimates for every `(n, seed)`, summarised per `n`.
pub fn sweep(fx: &Fixture, sizes: &[usize], seeds: usize, run_seed: u64) -> Result<Vec<SizeRow>, Failure> {
    if seeds < 2 || sizes.contains(&0) {
        return Err(Failure::Usage("mc-check needs n > 0 and at least 2 seeds".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let base = seed::derive(run_seed, n as u64);
            let estimates: Vec<f64> = (0..seeds)
                .into_par_iter()
                .map(|i| {
                    let batch = fx.spec.domain().sample_interior(n, seed::derive(base, i as u64));
                    estimate_interior(&fx.net, &fx.spec, &batch)
                })
                .collect::<Result<_, _>>()?;
            let k = seeds as f64;
            let mean = estimates.iter().sum::<f64>() / k;
            let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let std_error = var.sqrt();
            let mean_std_error = std_error / k.sqrt();
            Ok(SizeRow {
                n,
                seeds,
                mean,
                std_error,
                mean_std_error,
                exact: fx.exact,
                z: (mean - fx.exact) / mean_std_error,
            })
        })
        .collect()
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let section = &config.mc_check;
    let fx = fixture(&section.case)?;
    let rows = sweep(&fx, &section.n, section.seeds, config.seed())?;
    let mut table = Table::create(&config.out.join("mc_check.csv"), &HEADER)?;
    for (i, r) in rows.iter().enumerate() {
        let ratio = (i > 0).then(|| rows[i - 1].std_error / r.std_error);
        table.row([
            section.case.clone(),
            r.n.to_string(),
            r.seeds.to_string(),
            num(r.mean),
            num(r.std_error),
            num(r.mean_std_error),
            num(r.exact),
            num(r.z),
            opt(ratio),
        ])?;
        println!(
            "n {:>7}: mean {:.6} std_error {:.3e} z {:+.2}",
            r.n, r.mean, r.std_error, r.z
        );
    }
    table.finish()?;
    if let Some(r) = rows.iter().find(|r| r.z.abs() > 3.0) {
        return Err(Failure::Check(format!("n = {}: mean {} is {:.2} standard errors from {}", r.n, r.mean, r.z, r.exact)));
    }
    let increasing_n = rows.windows(2).all(|w| w[1].n > w[0].n);
    if increasing_n && rows.windows(2).any(|w| !(w[1].std_error < w[0].std_error)) {
        return Err(Failure::Check("standard error does not decrease with n".into()));
    }
    Ok(())
}
