use nalgebra::{Matrix2, Matrix4};
use noisebound_core::dynamics::build_dynamics;
use noisebound_core::entanglement::{
    converse_witness, entanglement_onset, fprime_zero, fprime_zero_min_eigenvalue, fprime_zero_routes, is_separable,
    log_negativity,
};
use noisebound_core::gaussian::{hermitian_min_eigenvalue4, Tolerances, C64};
use noisebound_core::sampling::{
    noise_with_ratio, random_classical_noise, random_coupling, random_local_symplectic, random_nonclassical_noise,
    random_physical, random_separable, rng,
};
use noisebound_core::screen::{is_classical, ScreenMoments};
use noisebound_core::CovarianceMatrix;
use rand::Rng;

#[test]
fn two_mode_squeezed_log_negativity_fixture() {
    let e = log_negativity(&CovarianceMatrix::two_mode_squeezed(0.3));
    assert!((e - 0.6).abs() < 1e-10, "{e}");
}

#[test]
fn log_negativity_agrees_with_ppt() {
    let mut r = rng(21);
    let tol = Tolerances::default();
    let mut entangled = 0;
    for _ in 0..1000 {
        let g = random_physical(&mut r);
        let sep = is_separable(&g, &tol).unwrap();
        let e = log_negativity(&g);
        // Near the boundary ν̃ ≈ 1 the monotone is O(margin); only decide away from it.
        if sep.min_eigenvalue.abs() < 1e-9 {
            continue;
        }
        assert_eq!(e > 1e-12, !sep.separable, "margin {} E_N {}", sep.min_eigenvalue, e);
        entangled += usize::from(!sep.separable);
    }
    assert!(entangled > 50 && entangled < 950, "sampler should hit both classes, got {entangled}");
}

#[test]
fn separability_invariant_under_local_symplectics() {
    let mut r = rng(22);
    let tol = Tolerances::default();
    for _ in 0..500 {
        let g = random_physical(&mut r);
        let s = random_local_symplectic(&mut r, 0.6);
        let a = is_separable(&g, &tol).unwrap();
        let b = is_separable(&g.congruence(&s), &tol).unwrap();
        if a.min_eigenvalue.abs() > 1e-8 {
            assert_eq!(a.separable, b.separable);
        }
    }
}

#[test]
fn fprime_routes_agree_and_track_classicality() {
    let mut r = rng(23);
    let tol = Tolerances::default();
    for k in 0..1000 {
        let g = random_coupling(&mut r, 0.0, 1.5);
        let c = 2.0 * r.random::<f64>();
        let y = noise_with_ratio(&mut r, g, c);
        let (a, b) = fprime_zero_routes(&y, g).unwrap();
        let diff = (a - b).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-10, "sample {k}: {diff}");
        let fmin = hermitian_min_eigenvalue4(&fprime_zero(&y, g).unwrap()).0;
        assert_eq!(fmin >= -tol.psd, is_classical(&y, g, &tol).classical, "sample {k}: c = {c}");
    }
}

#[test]
fn fprime_is_embedded_classicality_matrix() {
    let y = Matrix2::new(0.7, 0.1, 0.1, 0.4);
    let g = -0.25;
    let f = fprime_zero(&y, g).unwrap();
    // Only the (p_a, p_b) rows and columns carry weight; the spectrum is that of
    // Y − 2igΔ₁ padded with zeros.
    for (i, j) in [(0, 0), (0, 1), (0, 2), (0, 3), (2, 2), (1, 2), (2, 3)] {
        assert!(f[(i, j)].norm() < 1e-15, "({i},{j})");
    }
    let fmin = fprime_zero_min_eigenvalue(&y, g).unwrap();
    let direct = (0.7 + 0.4) / 2.0 - (((0.7 - 0.4_f64) / 2.0).powi(2) + 0.01 + 4.0 * g * g).sqrt();
    assert!((fmin - direct.min(0.0)).abs() < 1e-12);
}

#[test]
fn converse_witness_postconditions_on_random_inputs() {
    let mut r = rng(24);
    for _ in 0..1000 {
        let g = random_coupling(&mut r, 0.01, 1.5);
        let y = random_nonclassical_noise(&mut r, g, 0.99);
        let w = converse_witness(&y, g).unwrap();
        let i = C64::i();
        let z = w.z_ab;
        assert!((z[1] - (-i) * (-z[0])).norm() < 1e-14);
        assert!(w.eigenvalue < 0.0);
    }
}

#[test]
fn witness_quadratic_form_predicts_onset_slope() {
    let g = 0.3;
    let y = Matrix2::identity() * 0.2;
    let w = converse_witness(&y, g).unwrap();
    let d = build_dynamics(&ScreenMoments::from_noise(y, g), true).unwrap();
    let t = 1e-6;
    let gamma = noisebound_core::propagate(&CovarianceMatrix::vacuum(), &d, t).unwrap();
    let m = gamma.matrix().map(|v| C64::new(v, 0.0))
        + noisebound_core::gaussian::delta2_reversed().map(|v| C64::new(0.0, v));
    let value = (w.z_ab.adjoint() * m * w.z_ab)[(0, 0)].re;
    assert!((value / t - w.eigenvalue).abs() < 1e-4, "{} vs {}", value / t, w.eigenvalue);
}

#[test]
fn onset_scans_small_sample() {
    let mut r = rng(25);
    for _ in 0..10 {
        let g = random_coupling(&mut r, 0.05, 0.9);
        let yc = random_classical_noise(&mut r, g);
        let d = build_dynamics(&ScreenMoments::from_noise(yc, g), true).unwrap();
        let start = random_separable(&mut r);
        assert_eq!(entanglement_onset(&d, &start, 20.0, 2000).unwrap(), None);

        let yq = random_nonclassical_noise(&mut r, g, 0.8);
        let d = build_dynamics(&ScreenMoments::from_noise(yq, g), true).unwrap();
        assert!(entanglement_onset(&d, &CovarianceMatrix::vacuum(), 20.0, 2000).unwrap().is_some());
    }
}

#[test]
fn product_blocks_are_separable() {
    let mut r = rng(26);
    for _ in 0..100 {
        let s = random_local_symplectic(&mut r, 0.8);
        let d = 1.0 + r.random::<f64>();
        let g = CovarianceMatrix::new(Matrix4::identity() * d).unwrap().congruence(&s);
        assert!(is_separable(&g, &Tolerances::default()).unwrap().separable);
    }
}
