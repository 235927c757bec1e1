//! Derivatives against central differences. The oracle side only uses plain
//! network evaluation, never the tape.

use rand::Rng;
use ritzkit::autodiff::{grad_params, ParamVars};
use ritzkit::energy::{batch_seeds, estimate_total, estimate_total_with_grad, record_interior_integrand, EnergySpec, Source};
use ritzkit::{seed, Domain, Network};

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Points where every pre-activation is farther than `margin` from zero.
fn clear_points(net: &Network, dim: usize, count: usize, margin: f64, s: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(s);
    let mut out = Vec::new();
    while out.len() < count {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if net.min_abs_preactivation(&x) > margin {
            out.push(x);
        }
    }
    out
}

#[test]
fn input_gradient_matches_central_differences() {
    let h = 1e-6;
    for s in 0..5 {
        let net = Network::init(&[2, 8, 8, 1], s).unwrap();
        for x in clear_points(&net, 2, 20, 1e-3, 100 + s) {
            let g = net.input_gradient(&x).unwrap();
            for k in 0..2 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += h;
                xm[k] -= h;
                let fd = (net.eval(&xp) - net.eval(&xm)) / (2.0 * h);
                assert!(rel(g[k], fd, 1e-3) <= 1e-6, "seed {s} x {x:?}: {} vs {fd}", g[k]);
            }
        }
    }
}

/// `½|∇ₓu(x)|² − f(x)u(x)` by direct evaluation.
fn integrand(net: &Network, x: &[f64], f: f64) -> f64 {
    let g = net.eval_gradient(x);
    0.5 * g.iter().map(|v| v * v).sum::<f64>() - f * net.eval(x)
}

#[test]
fn dirichlet_integrand_parameter_gradient() {
    let h = 1e-6;
    let source = |x: &[f64]| 1.0 + x[0] * x[1];
    let spec = EnergySpec::poisson(0.0, Source::from_fn("1 + x0 x1", source), Domain::unit_cube(2)).unwrap();
    let mut checked = 0;
    for s in 0..4 {
        let net = Network::init(&[2, 8, 8, 1], 10 + s).unwrap();
        for x in clear_points(&net, 2, 5, 1e-2, 200 + s) {
            let (value, grad) = grad_params(&net, |tape, vars: &ParamVars| {
                record_interior_integrand(tape, vars, &net, &spec, &x)
            })
            .unwrap();
            assert!((value - integrand(&net, &x, source(&x))).abs() < 1e-12);
            let flat = net.to_flat();
            let mut shifted = net.clone();
            let mut at = |k: usize, d: f64| {
                let mut f = flat.clone();
                f[k] += d;
                shifted.set_flat(&f).unwrap();
                (integrand(&shifted, &x, source(&x)), shifted.activation_masks(&x))
            };
            let masks = net.activation_masks(&x);
            for (k, &g) in grad.iter().enumerate() {
                let (lp, mp) = at(k, h);
                let (lm, mm) = at(k, -h);
                if mp != masks || mm != masks {
                    continue;
                }
                let fd = (lp - lm) / (2.0 * h);
                // entries below 1e-3 are compared in absolute terms
                assert!(rel(g, fd, 1e-3) <= 1e-5, "param {k}: {g} vs {fd}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn total_objective_gradient_on_fixed_batches() {
    for (i, (dim, p)) in [(1, 2.0), (2, 2.0), (3, 3.0), (1, 4.0)].into_iter().enumerate() {
        let domain = if dim == 3 { Domain::unit_ball(3) } else { Domain::unit_cube(dim) };
        let (lo, hi) = domain.bounding_box();
        let net = Network::init_in_box(&Network::rectangular_arch(dim, 6, 2), &lo, &hi, i as u64).unwrap();
        let spec = EnergySpec::new(p, 2.5, Source::constant(1.0), domain).unwrap();
        let s = 31 + i as u64;
        let (_, grad) = estimate_total_with_grad(&net, &spec, 64, 16, s).unwrap();
        let (si, sb) = batch_seeds(s);
        let interior = spec.domain().sample_interior(64, si);
        let boundary = spec.domain().sample_boundary(16, sb);
        let points: Vec<&[f64]> = interior.iter().chain(boundary.iter()).collect();
        let masks = |n: &Network| points.iter().map(|x| n.activation_masks(x)).collect::<Vec<_>>();
        let base = masks(&net);
        let flat = net.to_flat();
        let h = 1e-4;
        let (mut worst, mut checked): (f64, usize) = (0.0, 0);
        for k in 0..flat.len() {
            let loss = |d: f64| {
                let mut f = flat.clone();
                f[k] += d;
                let mut shifted = net.clone();
                shifted.set_flat(&f).unwrap();
                let same = masks(&shifted) == base;
                (estimate_total(&shifted, &spec, 64, 16, s).unwrap().total, same)
            };
            let [(p1, a), (m1, b), (p2, c), (m2, e)] = [loss(h), loss(-h), loss(2.0 * h), loss(-2.0 * h)];
            if !(a && b && c && e) {
                continue; // a kink inside the stencil
            }
            let fd = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
            worst = worst.max(rel(grad[k], fd, 1e-3));
            checked += 1;
        }
        assert!(checked * 2 >= flat.len(), "only {checked} of {} checked", flat.len());
        assert!(worst <= 1e-5, "dim {dim} p {p}: {worst}");
    }
}
