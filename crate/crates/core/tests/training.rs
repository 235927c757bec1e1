use ritzkit::energy::estimate_total;
use ritzkit::pwl::pwl_to_network_1d;
use ritzkit::solve::{find_case, train, OptimizerConfig, TrainOptions, PWL_KNOTS};
use ritzkit::{Breakpoints1D, Network};

#[test]
fn sine_case_descends_below_the_zero_network() {
    let case = find_case::<f64>("poisson_1d_sine").unwrap();
    let spec = case.energy(100.0).unwrap();
    let p0 = Network::init(&[1, 16, 1], 3).unwrap();
    let out = train(&p0, &spec, &OptimizerConfig::default(), 1e-9, 5000, 11, &TrainOptions::default()).unwrap();
    let est = estimate_total(&out.params, &spec, 16384, 2, 99).unwrap();
    assert!(est.total < 0.0, "{}", est.total);
    assert!(out.best_loss < 0.0);
}

#[test]
fn exact_start_stays_put() {
    let knots: Vec<f64> = (0..PWL_KNOTS).map(|i| i as f64 / (PWL_KNOTS - 1) as f64).collect();
    let bp = Breakpoints1D::interpolate(knots, |x| (std::f64::consts::PI * x).sin()).unwrap();
    let p0 = pwl_to_network_1d(&bp).unwrap();
    let case = find_case::<f64>("poisson_1d_pwl").unwrap();
    // a stiff penalty: with a weak one the trace relaxes and the loss drops well below F_min
    let spec = case.energy(1000.0).unwrap();
    let delta = 1e-2;
    let cfg = OptimizerConfig { step_size: 1e-4, ..Default::default() };
    let out = train(&p0, &spec, &cfg, delta, 2000, 5, &TrainOptions::default()).unwrap();
    assert!(out.steps < 2000, "no plateau");

    // both ends on one shared batch, so the difference carries no sampling noise
    let before = estimate_total(&p0, &spec, 65536, 2, 123).unwrap();
    let after = estimate_total(&out.params, &spec, 65536, 2, 123).unwrap();
    assert!((after.total - before.total).abs() <= delta, "{} -> {}", before.total, after.total);

    // the sine problem's minimum; the mesh interpolant sits slightly above it
    let f_min = find_case::<f64>("poisson_1d_sine").unwrap().f_min.unwrap();
    let noise = 3.0 * after.interior_std_error;
    assert!((after.total - f_min).abs() <= noise + delta, "{} vs {f_min} (±{noise})", after.total);
}
