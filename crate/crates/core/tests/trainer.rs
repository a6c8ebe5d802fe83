mod common;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbl_core::experiments::common::{circle_rule, sobolev_operator};
use sbl_core::harmonics::{project, HarmonicExpansion};
use sbl_core::ntk::build_h_empirical;
use sbl_core::quadrature::{design_weights, equispaced_nodes};
use sbl_core::trainer::{
    init_net, loss, m_constants, max_step_size, train, InitScheme, TrainConfig,
};
use sbl_core::{Error, LossOperator, SpherePoint, SpherePointSet, TwoLayerReluNet};

#[test]
fn antithetic_init_outputs_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = common::random_points(100, 3, &mut rng);
    let net = init_net(64, 3, 0.7, 9, InitScheme::Antithetic).unwrap();
    assert!(net.forward_batch(&pts).unwrap().iter().all(|&u| u == 0.0));
    assert!(matches!(
        init_net(7, 3, 1.0, 0, InitScheme::Antithetic),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn gaussian_init_scale() {
    let (m, d, kappa) = (100_000, 3, 0.3);
    let net = init_net(m, d, kappa, 2, InitScheme::Gaussian).unwrap();
    let per: Vec<f64> = net
        .weights()
        .chunks(d)
        .map(|w| w.iter().map(|x| x * x).sum::<f64>() / d as f64)
        .collect();
    let mean = per.iter().sum::<f64>() / m as f64;
    // ‖w‖²/d has variance 2κ⁴/d
    let sigma = (2.0 * kappa.powi(4) / d as f64 / m as f64).sqrt();
    assert!((mean - kappa * kappa).abs() <= 3.0 * sigma, "mean {mean}");
    assert!(net.biases().iter().all(|&b| b == 0.0));
    assert!(net.signs().iter().all(|&a| a == 1.0 || a == -1.0));
}

#[test]
fn init_is_deterministic() {
    for scheme in [InitScheme::Gaussian, InitScheme::Antithetic] {
        let a = init_net(32, 2, 1.0, 42, scheme).unwrap();
        let b = init_net(32, 2, 1.0, 42, scheme).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }
}

#[test]
fn forward_examples() {
    let x = SpherePoint::new(vec![0.6, 0.8]).unwrap();
    let net = TwoLayerReluNet::from_parts(1, 2, vec![0.6, 0.8], vec![0.0], vec![1.0]).unwrap();
    assert_abs_diff_eq!(net.forward(&x).unwrap(), 1.0, epsilon = 1e-15);

    let base = init_net(16, 2, 1.0, 3, InitScheme::Gaussian).unwrap();
    let b: Vec<f64> = (0..16).map(|r| 0.1 * r as f64 - 0.5).collect();
    let net = TwoLayerReluNet::from_parts(
        16,
        2,
        base.weights().to_vec(),
        b.clone(),
        base.signs().to_vec(),
    )
    .unwrap();
    let alpha = 2.5;
    let scaled = TwoLayerReluNet::from_parts(
        16,
        2,
        base.weights().iter().map(|w| alpha * w).collect(),
        b.iter().map(|v| alpha * v).collect(),
        base.signs().to_vec(),
    )
    .unwrap();
    for t in [0.0, 1.0, 2.5, 4.0] {
        let p = SpherePoint::from_angle(t);
        assert_abs_diff_eq!(
            scaled.forward(&p).unwrap(),
            alpha * net.forward(&p).unwrap(),
            epsilon = 1e-12
        );
    }
}

#[test]
fn loss_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let nodes = common::random_points(20, 2, &mut rng);
    let net = init_net(32, 2, 1.0, 1, InitScheme::Gaussian).unwrap();
    let u = net.forward_batch(&nodes).unwrap();
    let p = LossOperator::mse(20).unwrap();
    assert_eq!(loss(&net, &u, &nodes, &p).unwrap(), 0.0);

    let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let direct = 0.5 / 20.0 * y.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    assert_abs_diff_eq!(loss(&net, &y, &nodes, &p).unwrap(), direct, epsilon = 1e-15);

    assert!(matches!(
        loss(&net, &y[..5], &nodes, &p),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn quadrature_loss_matches_parseval() {
    let rule = circle_rule([100, 40, 1000], 55).unwrap();
    let g = HarmonicExpansion::sine_sum(9);
    let y = g.sample(rule.nodes()).unwrap();
    let p = LossOperator::quadrature(&rule);

    // antithetic init: N ≡ 0, so the residual is the bandlimited target
    let zero = init_net(64, 2, 1.0, 5, InitScheme::Antithetic).unwrap();
    let phi = loss(&zero, &y, rule.nodes(), &p).unwrap();
    let coeffs = project(&y, &rule, 27).unwrap();
    assert_abs_diff_eq!(phi, 0.5 * coeffs.norm_sq(), epsilon = 1e-8);
    assert_abs_diff_eq!(phi, 0.5 * g.norm_sq(), epsilon = 1e-8);

    // a generic network: discrete Bessel inequality with a small gap
    let net = init_net(64, 2, 1.0, 5, InitScheme::Gaussian).unwrap();
    let phi = loss(&net, &y, rule.nodes(), &p).unwrap();
    let u = net.forward_batch(rule.nodes()).unwrap();
    let z: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a - b).collect();
    let low = 0.5 * project(&z, &rule, 27).unwrap().norm_sq();
    assert!(
        phi >= low - 1e-10 && phi - low <= 0.05 * phi,
        "{phi} vs {low}"
    );
}

#[test]
fn gradient_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let nodes = common::random_points(12, 3, &mut rng);
    let net = init_net(10, 3, 1.0, 2, InitScheme::Gaussian).unwrap();
    let u = net.forward_batch(&nodes).unwrap();
    let p = LossOperator::mse(12).unwrap();
    let g = net.gradient(&u, &nodes, &p).unwrap();
    assert!(g.dw.iter().chain(&g.db).all(|&x| x == 0.0));

    // one dead neuron: w = 0, b = −1 makes every pre-activation negative
    let mut w = net.weights().to_vec();
    let mut b = net.biases().to_vec();
    w[..3].fill(0.0);
    b[0] = -1.0;
    let dead = TwoLayerReluNet::from_parts(10, 3, w, b, net.signs().to_vec()).unwrap();
    let y: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = dead.gradient(&y, &nodes, &p).unwrap();
    assert!(g.dw[..3].iter().all(|&x| x == 0.0));
    assert_eq!(g.db[0], 0.0);
}

#[test]
fn gradient_matches_finite_differences_when_all_active() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let nodes = common::random_points(15, 2, &mut rng);
    let (m, d) = (6, 2);
    // b = 3 keeps every pre-activation positive
    let w: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let net =
        TwoLayerReluNet::from_parts(m, d, w, vec![3.0; m], vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0])
            .unwrap();
    let p = LossOperator::scaled_identity(1.0, 15).unwrap();
    let y: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = net.gradient(&y, &nodes, &p).unwrap();
    let analytic: Vec<f64> = g.dw.iter().chain(&g.db).copied().collect();
    let h = 1e-6;
    for k in 0..m * d + m {
        let at = |delta: f64| {
            let mut w = net.weights().to_vec();
            let mut b = net.biases().to_vec();
            if k < m * d {
                w[k] += delta;
            } else {
                b[k - m * d] += delta;
            }
            let n = TwoLayerReluNet::from_parts(m, d, w, b, net.signs().to_vec()).unwrap();
            loss(&n, &y, &nodes, &p).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let rel = (fd - analytic[k]).abs() / analytic[k].abs().max(1e-8);
        assert!(
            rel <= 1e-5,
            "coordinate {k}: fd {fd}, analytic {}",
            analytic[k]
        );
    }
}

#[test]
fn gd_step_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let nodes = common::random_points(10, 2, &mut rng);
    let mut net = init_net(8, 2, 1.0, 3, InitScheme::Gaussian).unwrap();
    let before = net.clone();
    let u = net.forward_batch(&nodes).unwrap();
    let p = LossOperator::mse(10).unwrap();
    let zero = net.gradient(&u, &nodes, &p).unwrap();
    net.gd_step(&zero, 0.5);
    assert_eq!(net, before);

    let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = net.gradient(&y, &nodes, &p).unwrap();
    net.gd_step(&g, 0.0);
    assert_eq!(net, before);
}

#[test]
fn first_step_from_antithetic_init_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nodes = common::random_points(12, 2, &mut rng);
    let y: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = LossOperator::mse(12).unwrap();
    let mut net = init_net(256, 2, 1.0, 4, InitScheme::Antithetic).unwrap();
    let h0 = build_h_empirical(&net, &nodes).unwrap();
    let eta = 1e-3;
    let g = net.gradient(&y, &nodes, &p).unwrap();
    net.gd_step(&g, eta);
    let u1 = net.forward_batch(&nodes).unwrap();
    let py = p.apply(&y);
    let want = h0.mul_vec(&py);
    for (a, b) in u1.iter().zip(&want) {
        assert_abs_diff_eq!(*a, 2.0 * eta * b, epsilon = 1e-10);
    }
}

#[test]
fn train_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let nodes = common::random_points(10, 2, &mut rng);
    let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = LossOperator::mse(10).unwrap();
    let config = TrainConfig::new(0.1, 0);
    let mut net = config.init_net(16, 2).unwrap();
    let trace = train(&mut net, &y, &nodes, &p, &config, &mut []).unwrap();
    assert_eq!(trace.records.len(), 1);
    assert_eq!(trace.records[0].epoch, 0);

    let mut config = TrainConfig::new(1e200, 50);
    config.kappa = 1.0;
    let mut net = config.init_net(16, 2).unwrap();
    assert!(matches!(
        train(&mut net, &y, &nodes, &p, &config, &mut []),
        Err(Error::Divergence { .. })
    ));
}

#[test]
fn quadrature_training_is_monotone_at_safe_step() {
    let rule = circle_rule([100, 40, 1000], 55).unwrap();
    let y = HarmonicExpansion::sine_sum(9).sample(rule.nodes()).unwrap();
    let p = LossOperator::quadrature(&rule);
    let mut config = TrainConfig::new(0.9 * max_step_size(&p, rule.len()), 30);
    config.kappa = 10.0;
    config.scheme = InitScheme::Antithetic;
    let mut net = config.init_net(1 << 14, 2).unwrap();
    let trace = train(&mut net, &y, rule.nodes(), &p, &config, &mut []).unwrap();
    assert_eq!(trace.monotonicity_violations, 0);
    assert!(trace.final_loss() < trace.records[0].loss);
}

#[test]
fn m_constant_examples() {
    let n = 25;
    let (a, b) = m_constants(&LossOperator::mse(n).unwrap());
    assert_abs_diff_eq!(a, (1.0 / n as f64).sqrt(), epsilon = 1e-15);
    assert_eq!(a, b);

    let rule = circle_rule([100, 40, 1000], 55).unwrap();
    let (a, b) = m_constants(&LossOperator::quadrature(&rule));
    assert_abs_diff_eq!(a, rule.c_max().sqrt(), epsilon = 1e-15);
    assert_eq!(a, b);

    let eq = design_weights(&equispaced_nodes(30).unwrap(), 29).unwrap();
    let ps = LossOperator::Sobolev(sobolev_operator(&eq, 1.0, 15).unwrap());
    let (a, _) = m_constants(&ps);
    let LossOperator::Sobolev(op) = &ps else {
        unreachable!()
    };
    let dense_max = op
        .assemble_dense()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    assert_abs_diff_eq!(a, dense_max.sqrt(), epsilon = 1e-10);
}

#[test]
fn max_step_size_examples() {
    let n = 40;
    assert_abs_diff_eq!(
        max_step_size(&LossOperator::mse(n).unwrap(), n),
        0.5,
        epsilon = 1e-15
    );

    let area = 2.0 * std::f64::consts::PI;
    let uniform = LossOperator::diagonal(vec![area / n as f64; n]).unwrap();
    assert_abs_diff_eq!(
        max_step_size(&uniform, n),
        1.0 / (2.0 * area),
        epsilon = 1e-15
    );

    let p = LossOperator::scaled_identity(0.3, n).unwrap();
    let p4 = LossOperator::scaled_identity(1.2, n).unwrap();
    assert_abs_diff_eq!(
        max_step_size(&p, n) / max_step_size(&p4, n),
        4.0,
        epsilon = 1e-12
    );
}

#[test]
fn signs_stay_fixed_through_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let nodes = common::random_points(16, 3, &mut rng);
    let y: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = LossOperator::mse(16).unwrap();
    let mut config = TrainConfig::new(0.4, 100);
    config.kappa = 1.0;
    let mut net = config.init_net(40, 3).unwrap();
    let signs = net.signs().to_vec();
    train(&mut net, &y, &nodes, &p, &config, &mut []).unwrap();
    assert_eq!(net.signs(), signs.as_slice());
}

#[test]
fn residual_recursion_holds_without_sign_flips() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let nodes = common::random_points(10, 2, &mut rng);
    let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = LossOperator::mse(10).unwrap();
    let eta = 0.05;
    let mut net = init_net(512, 2, 1.0, 1, InitScheme::Antithetic).unwrap();
    let mut checked = 0;
    for _ in 0..20 {
        let pattern = net.activation_pattern(&nodes);
        let h = build_h_empirical(&net, &nodes).unwrap();
        let z0: Vec<f64> = y
            .iter()
            .zip(net.forward_batch(&nodes).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        let g = net.gradient(&y, &nodes, &p).unwrap();
        net.gd_step(&g, eta);
        if net.activation_pattern(&nodes) != pattern {
            continue;
        }
        let z1: Vec<f64> = y
            .iter()
            .zip(net.forward_batch(&nodes).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        let hpz = h.mul_vec(&p.apply(&z0));
        for i in 0..10 {
            assert_abs_diff_eq!(z1[i], z0[i] - 2.0 * eta * hpz[i], epsilon = 1e-10);
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn identical_runs_give_identical_traces() {
    let nodes = SpherePointSet::from_angles(&[0.1, 0.9, 2.0, 3.3, 4.1, 5.5]).unwrap();
    let y = vec![0.5, -0.2, 0.3, 0.9, -0.7, 0.1];
    let p = LossOperator::mse(6).unwrap();
    let mut config = TrainConfig::new(0.3, 40);
    config.record_residuals = true;
    config.kappa = 1.0;
    let run = || {
        let mut net = config.init_net(20, 2).unwrap();
        train(&mut net, &y, &nodes, &p, &config, &mut []).unwrap()
    };
    assert_eq!(run(), run());
}
