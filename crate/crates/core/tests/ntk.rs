mod common;

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbl_core::diagnostics::funk_hecke_errors;
use sbl_core::experiments::common::circle_rule;
use sbl_core::ntk::{
    build_h_empirical, build_h_infinity, k_infinity, mu_closed, mu_numeric, spectrum_hp,
};
use sbl_core::trainer::{init_net, InitScheme};
use sbl_core::{Error, KernelSpectrum, LossOperator, SpherePointSet, TwoLayerReluNet};

#[test]
fn kernel_function_examples() {
    assert_eq!(k_infinity(1.0).unwrap(), 0.5);
    assert_eq!(k_infinity(-1.0).unwrap(), 0.0);
    assert_eq!(k_infinity(0.0).unwrap(), 0.125);
    assert_eq!(k_infinity(1.0 + 1e-13).unwrap(), 0.5);
    assert!(k_infinity(1.0 + 1e-9).is_err());
}

#[test]
fn h_infinity_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts = common::random_points(8, 3, &mut rng);
    let h = build_h_infinity(&pts).unwrap();
    for i in 0..8 {
        assert_eq!(h.entries()[(i, i)], 0.5);
        for j in 0..8 {
            assert_eq!(h.entries()[(i, j)], h.entries()[(j, i)]);
        }
    }
    assert!(h.min_eigenvalue() > 0.0);

    let pair = SpherePointSet::from_rows(3, vec![0.0, 0.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
    assert_eq!(build_h_infinity(&pair).unwrap().entries()[(0, 1)], 0.0);

    let dup = SpherePointSet::from_angles(&[0.3, 0.3, 1.0]).unwrap();
    assert!(matches!(
        build_h_infinity(&dup),
        Err(Error::DuplicateNodes { .. } | Error::DegenerateNodes(_))
    ));
}

#[test]
fn empirical_kernel_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pts = common::random_points(6, 2, &mut rng);
    // w = 0, b = 1: every lifted pre-activation is positive
    let net = TwoLayerReluNet::from_parts(1, 2, vec![0.0, 0.0], vec![1.0], vec![1.0]).unwrap();
    let h = build_h_empirical(&net, &pts).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let xt =
                0.5 * (pts.point(i)[0] * pts.point(j)[0] + pts.point(i)[1] * pts.point(j)[1] + 1.0);
            assert_abs_diff_eq!(h.entries()[(i, j)], xt, epsilon = 1e-15);
        }
    }

    let net = init_net(37, 2, 1.0, 4, InitScheme::Gaussian).unwrap();
    let h = build_h_empirical(&net, &pts).unwrap();
    for i in 0..6 {
        let active = (0..37)
            .filter(|&r| net.preactivation(r, pts.point(i)) >= 0.0)
            .count();
        assert_abs_diff_eq!(h.entries()[(i, i)], active as f64 / 37.0, epsilon = 1e-15);
        assert!(h.entries()[(i, i)] <= 1.0);
    }
}

#[test]
fn closed_form_eigenvalues() {
    assert_abs_diff_eq!(
        mu_closed(3, 0).unwrap(),
        mu_numeric(3, 0).unwrap(),
        epsilon = 1e-10
    );
    let r = mu_closed(3, 10).unwrap() / mu_closed(3, 20).unwrap();
    assert!((4.0..=16.0).contains(&r), "ratio {r} vs 2^3");
    for ell in 1..=12 {
        assert!(mu_closed(3, ell).unwrap() > 0.0);
    }
    assert!(mu_closed(4, 3).is_err());
    for ell in 0..=20 {
        assert_abs_diff_eq!(
            mu_closed(3, ell).unwrap(),
            mu_numeric(3, ell).unwrap(),
            epsilon = 1e-10
        );
    }
}

#[test]
fn numeric_eigenvalue_on_circle_matches_direct_integration() {
    // trapezoid on 10⁶ circle points of K∞(cos θ)
    let n = 1_000_000;
    let h = std::f64::consts::TAU / n as f64;
    let direct: f64 = (0..n)
        .map(|j| k_infinity((h * j as f64).cos()).unwrap())
        .sum::<f64>()
        * h;
    assert_abs_diff_eq!(mu_numeric(2, 0).unwrap(), direct, epsilon = 1e-10);
    for d in [2, 3, 4, 5] {
        for ell in 0..15 {
            assert!(mu_numeric(d, ell).unwrap() > 0.0);
        }
    }
}

#[test]
fn spectrum_scaled_bounds() {
    let spec = KernelSpectrum::best(3, 40).unwrap();
    let scaled: Vec<f64> = (5..=40).map(|l| spec.mu[l] * (l as f64).powi(3)).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi / lo < 10.0, "μ_ℓ ℓ³ in [{lo}, {hi}]");
}

#[test]
fn spectrum_hp_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pts = common::random_points(30, 3, &mut rng);
    let h = build_h_infinity(&pts).unwrap();
    let own = h.eigenvalues();

    let identity = spectrum_hp(&h, &LossOperator::scaled_identity(1.0, 30).unwrap()).unwrap();
    let mse = spectrum_hp(&h, &LossOperator::mse(30).unwrap()).unwrap();
    for k in 0..30 {
        assert_abs_diff_eq!(identity.eigenvalues[k], own[k], epsilon = 1e-12);
        assert_abs_diff_eq!(mse.eigenvalues[k], own[k] / 30.0, epsilon = 1e-13);
    }
    assert!(spectrum_hp(&h, &LossOperator::mse(10).unwrap()).is_err());
}

#[test]
fn hdc_spectrum_clusters_at_mu() {
    let rule = circle_rule([100, 40, 1000], 55).unwrap();
    let h = build_h_infinity(rule.nodes()).unwrap();
    let ev = spectrum_hp(&h, &LossOperator::quadrature(&rule))
        .unwrap()
        .eigenvalues;
    let thetas = rule.nodes().angles();
    // H D_c is self-adjoint under the c-weighted inner product, so an eigenvalue
    // lies within ‖e^d‖_c / ‖g‖_c of μ_ℓ, with g = cos ℓθ or sin ℓθ
    for ell in 0..=6 {
        let mu = mu_numeric(2, ell).unwrap();
        for g in [f64::cos, f64::sin] {
            let y: Vec<f64> = thetas.iter().map(|&t| g(ell as f64 * t)).collect();
            let norm = sbl_core::quadrature::integrate(
                &rule,
                &y.iter().map(|v| v * v).collect::<Vec<_>>(),
            )
            .unwrap();
            if norm < 1e-9 {
                continue;
            }
            let e = funk_hecke_errors(&h, &rule, &y, mu).unwrap();
            let e_c = sbl_core::quadrature::integrate(
                &rule,
                &e.iter().map(|v| v * v).collect::<Vec<_>>(),
            )
            .unwrap();
            let bound = (e_c / norm).sqrt();
            let gap = ev
                .iter()
                .map(|&l| (l - mu).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(
                gap <= bound * (1.0 + 1e-9) + 1e-14,
                "ℓ = {ell}: gap {gap}, bound {bound}"
            );
            assert!(gap <= 1e-3 * mu.max(0.1), "ℓ = {ell}: gap {gap}");
        }
    }
    // top of the spectrum: μ_0 once, then μ_1 twice
    let mut top = ev.clone();
    top.reverse();
    assert!((top[0] - mu_numeric(2, 0).unwrap()).abs() <= 1e-3);
    for k in [1, 2] {
        assert!((top[k] - mu_numeric(2, 1).unwrap()).abs() <= 1e-3);
    }
}
