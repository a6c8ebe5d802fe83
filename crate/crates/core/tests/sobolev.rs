use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbl_core::experiments::common::circle_rule;
use sbl_core::harmonics::{eval_harmonic, HarmonicIndex};
use sbl_core::quadrature::{design_weights, equispaced_nodes};
use sbl_core::sobolev::{
    build_image_mask, build_p_sobolev, build_p_sobolev_semidefinite, image_sobolev_loss,
    theoretical_rate, Image,
};
use sbl_core::{Error, HarmonicExpansion, KernelSpectrum};

fn harmonic_samples(rule: &sbl_core::QuadratureRule, d: usize, ell: usize, p: usize) -> Vec<f64> {
    let idx = HarmonicIndex::new(d, ell, p).unwrap();
    (0..rule.len())
        .map(|i| eval_harmonic(idx, &rule.nodes().to_point(i)).unwrap())
        .collect()
}

#[test]
fn rank_deficient_operator_is_rejected() {
    let rule = design_weights(&equispaced_nodes(40).unwrap(), 10).unwrap();
    assert!(matches!(
        build_p_sobolev(&rule, 1.0, 5),
        Err(Error::DegenerateOperator(_))
    ));
}

#[test]
fn zero_exponent_is_the_l2_norm_of_bandlimited_residuals() {
    // 2L+1 = 25 nodes with an exact rule of degree 24 = 2·12
    let rule = design_weights(&equispaced_nodes(25).unwrap(), 24).unwrap();
    let op = build_p_sobolev(&rule, 0.0, 12).unwrap();
    let q = HarmonicExpansion::from_coeffs(
        2,
        12,
        (0..25).map(|k| ((k * 7 % 11) as f64 - 5.0) / 3.0).collect(),
    )
    .unwrap();
    let v = q.sample(rule.nodes()).unwrap();
    assert_abs_diff_eq!(op.quad_form(&v), q.norm_sq(), epsilon = 1e-10);
}

#[test]
fn three_arc_operator_is_semidefinite_at_lmax_30() {
    // 61 harmonics against 1140 nodes: positive definite is impossible
    let rule = circle_rule([100, 40, 1000], 55).unwrap();
    for s in [-1.0, 0.0, 1.0, 2.0, 3.0, 4.0] {
        assert!(matches!(
            build_p_sobolev(&rule, s, 30),
            Err(Error::DegenerateOperator(_))
        ));
        let op = build_p_sobolev_semidefinite(&rule, s, 30).unwrap();
        let v = harmonic_samples(&rule, 2, 7, 1);
        assert!(op.quad_form(&v) > 0.0);
        assert!(!op.is_certified_spd());
    }
}

#[test]
fn apply_examples() {
    let rule = design_weights(&equispaced_nodes(50).unwrap(), 49).unwrap();
    let op = build_p_sobolev(&rule, 1.5, 25).unwrap();
    assert!(op.apply(&vec![0.0; 50]).iter().all(|&x| x == 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = op.assemble_dense() * nalgebra::DVector::from_vec(v.clone());
    for (a, b) in op.apply(&v).iter().zip(dense.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    assert!(op.try_apply(&v[..10]).is_err());

    let p0 = build_p_sobolev(&rule, 0.0, 25).unwrap();
    for ell in [1usize, 4, 9] {
        let y = harmonic_samples(&rule, 2, ell, 2);
        let a = build_p_sobolev(&rule, 1.0, 25).unwrap().apply(&y);
        let b = p0.apply(&y);
        for (x, z) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*x, z * ((1 + ell) as f64).powi(2), epsilon = 1e-10);
        }
    }
}

#[test]
fn rate_examples() {
    let spec = KernelSpectrum::best(2, 20).unwrap();
    for ell in 0..=20 {
        assert_eq!(theoretical_rate(ell, 0.0, 2.0, &spec).unwrap(), 1.0);
        assert_abs_diff_eq!(
            theoretical_rate(ell, 0.3, 0.0, &spec).unwrap(),
            1.0 - 0.6 * spec.mu[ell],
            epsilon = 1e-15
        );
    }
    // s = 3: (1+ℓ)^6 μ_ℓ grows, so the rates fall with ℓ
    let eta = 1e-9;
    let rates: Vec<f64> = (1..=9)
        .map(|l| theoretical_rate(l, eta, 3.0, &spec).unwrap())
        .collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn image_mask_examples() {
    let m = build_image_mask(8, 6, 0.0).unwrap();
    assert!(m.values().iter().all(|&v| v == 1.0));
    for s in [-1.0, 0.5, 3.0] {
        assert_eq!(build_image_mask(7, 4, s).unwrap().at_frequency(0, 0), 1.0);
    }
    assert_abs_diff_eq!(
        build_image_mask(4, 4, 2.0).unwrap().at_frequency(1, 1),
        3.0,
        epsilon = 1e-15
    );
}

#[test]
fn image_loss_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let img = Image::new(8, 8, a.clone()).unwrap();
    let mask = build_image_mask(8, 8, 1.0).unwrap();
    assert_eq!(image_sobolev_loss(&img, &img, &mask).unwrap(), 0.0);

    let b: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let other = Image::new(8, 8, b.clone()).unwrap();
    let half_sq = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let l0 = image_sobolev_loss(&img, &other, &build_image_mask(8, 8, 0.0).unwrap()).unwrap();
    assert_abs_diff_eq!(l0, half_sq, epsilon = 1e-12);

    // checkerboard difference: the highest frequency on both axes
    let check: Vec<f64> = (0..64)
        .map(|k| if (k / 8 + k % 8) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let diff = Image::new(8, 8, check).unwrap();
    let zero = Image::zeros(8, 8);
    let hi = image_sobolev_loss(&diff, &zero, &build_image_mask(8, 8, 1.0).unwrap()).unwrap();
    let lo = image_sobolev_loss(&diff, &zero, &build_image_mask(8, 8, -1.0).unwrap()).unwrap();
    assert!(hi > lo);

    assert!(image_sobolev_loss(&Image::zeros(4, 4), &zero, &mask).is_err());
}

#[test]
fn monotone_reweighting_in_s() {
    let rule = design_weights(&equispaced_nodes(41).unwrap(), 40).unwrap();
    let ops: Vec<_> = [-1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|&s| build_p_sobolev(&rule, s, 20).unwrap())
        .collect();
    let constant = harmonic_samples(&rule, 2, 0, 1);
    let base = ops[0].quad_form(&constant);
    for op in &ops {
        assert_abs_diff_eq!(op.quad_form(&constant), base, epsilon = 1e-12);
    }
    for ell in [1usize, 3, 10] {
        let v = harmonic_samples(&rule, 2, ell, 1);
        let q: Vec<f64> = ops.iter().map(|op| op.quad_form(&v)).collect();
        assert!(q.windows(2).all(|w| w[1] > w[0]), "ℓ = {ell}: {q:?}");
    }
}
