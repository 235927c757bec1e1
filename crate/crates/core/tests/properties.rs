use proptest::prelude::*;
use ritzkit::net::Layer;
use ritzkit::pwl::{kuhn_interpolant, max_tree_depth, pwl_to_network_1d, relu_max, relu_min};
use ritzkit::{Breakpoints1D, Network};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn bias_free(seed: u64, arch: &[usize]) -> Network {
    let mut net = Network::init(arch, seed).unwrap();
    for layer in net.layers_mut() {
        layer.bias_mut().iter_mut().for_each(|b| *b = 0.0);
    }
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bias_free_nets_are_positively_homogeneous(
        seed in 0u64..1000,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        alpha in 0.01f64..50.0,
    ) {
        let net = bias_free(seed, &[3, 7, 5, 1]);
        let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let (a, b) = (net.eval(&scaled), alpha * net.eval(&x));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * alpha.max(1.0));
    }

    #[test]
    fn affine_on_each_activation_region(
        seed in 0u64..1000,
        x in prop::collection::vec(-1.0f64..1.0, 2),
        step in prop::collection::vec(-1e-2f64..1e-2, 2),
    ) {
        let net = Network::init(&[2, 6, 6, 1], seed).unwrap();
        let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        // regions are convex, so equal patterns at both ends cover the segment
        prop_assume!(net.activation_masks(&x) == net.activation_masks(&y));
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        prop_assert!(close(net.eval(&mid), 0.5 * (net.eval(&x) + net.eval(&y))));
        let (gx, gy) = (net.eval_gradient(&x), net.eval_gradient(&y));
        prop_assert!(gx.iter().zip(&gy).all(|(a, b)| close(*a, *b)));
        let dx: f64 = gx.iter().zip(&step).map(|(g, s)| g * s).sum();
        prop_assert!((net.eval(&y) - net.eval(&x) - dx).abs() <= 1e-12 * (1.0 + net.eval(&x).abs()));
    }

    #[test]
    fn breakpoint_networks_are_exact(
        gaps in prop::collection::vec(0.01f64..1.0, 1..12),
        values in prop::collection::vec(-5.0f64..5.0, 12),
        slopes in (-3.0f64..3.0, -3.0f64..3.0),
        probes in prop::collection::vec(-0.5f64..1.5, 50),
    ) {
        let mut knots = vec![-0.2];
        for g in &gaps {
            knots.push(knots.last().unwrap() + g);
        }
        let span = knots.last().unwrap() - knots[0];
        let vals = values[..knots.len()].to_vec();
        let bp = Breakpoints1D::new(knots.clone(), vals, slopes.0, slopes.1).unwrap();
        let net = pwl_to_network_1d(&bp).unwrap();
        prop_assert_eq!(net.depth(), 2);
        for t in probes {
            let x = knots[0] + t * span;
            prop_assert!((net.eval(&[x]) - bp.eval(x)).abs() <= 1e-12 * (1.0 + bp.eval(x).abs()) * (1.0 + span));
        }
    }

    #[test]
    fn max_and_min_of_affine_maps(
        coeffs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0), 1..7),
        x in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let nets: Vec<Network> = coeffs
            .iter()
            .map(|&(a, b, c)| Network::new(vec![Layer::new(1, 2, vec![a, b], vec![c]).unwrap()]).unwrap())
            .collect();
        let vals: Vec<f64> = coeffs.iter().map(|&(a, b, c)| a * x[0] + b * x[1] + c).collect();
        let mx = relu_max(&nets).unwrap();
        let mn = relu_min(&nets).unwrap();
        prop_assert_eq!(mx.depth(), max_tree_depth(&vec![1; nets.len()]));
        prop_assert!(close(mx.eval(&x), vals.iter().copied().fold(f64::MIN, f64::max)));
        prop_assert!(close(mn.eval(&x), vals.iter().copied().fold(f64::MAX, f64::min)));
    }

    #[test]
    fn kuhn_interpolant_is_exact_on_affine_maps(
        a in prop::collection::vec(-2.0f64..2.0, 3),
        c in -1.0f64..1.0,
        delta in 0.05f64..0.5,
        x in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let f = |y: &[f64]| a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + c;
        let interp = kuhn_interpolant(f, &[-1.0; 3], &[1.0; 3], delta).unwrap();
        prop_assert!((interp.eval(&x) - f(&x)).abs() <= 1e-11);
    }

    #[test]
    fn flat_parameters_round_trip(seed in 0u64..1000, width in 1usize..10, depth in 1usize..4) {
        let net = Network::init(&Network::rectangular_arch(2, width, depth), seed).unwrap();
        let mut other = Network::zeros(&net.dims()).unwrap();
        other.set_flat(&net.to_flat()).unwrap();
        prop_assert_eq!(other, net);
    }
}
