use nalgebra::{Matrix2, Matrix4, Vector4};
use noisebound_core::dynamics::build_dynamics;
use noisebound_core::noise::{excess_variance, noise_rate_at_zero, run_noise_test};
use noisebound_core::propagate;
use noisebound_core::sampling::{random_classical_noise, random_coupling, random_physical, rng};
use noisebound_core::screen::{CouplingConvention, DisplacementScreen, ScreenMoments};
use noisebound_core::CovarianceMatrix;

fn dynamics(y: Matrix2<f64>, g: f64) -> noisebound_core::GaussianDynamics {
    build_dynamics(&ScreenMoments::from_noise(y, g), true).unwrap()
}

#[test]
fn excess_of_linear_diffusion_drops_cross_terms() {
    let m = DisplacementScreen::new(0.2, 0.5, 0.15).unwrap().moments(CouplingConvention::Appendix);
    let d = build_dynamics(&m, true).unwrap();
    let t = 0.37;
    let gamma = CovarianceMatrix::new(Matrix4::identity() + d.diffusion() * t).unwrap();
    let e = excess_variance(&gamma, &CovarianceMatrix::vacuum());
    assert!((e - t * (m.y_xx() + m.y_pp()) / 2.0).abs() < 1e-15);
}

#[test]
fn zero_time_rate_matches_finite_differences() {
    let mut r = rng(31);
    for _ in 0..50 {
        let g = random_coupling(&mut r, 0.05, 0.9);
        let d = dynamics(random_classical_noise(&mut r, g), g);
        let report = run_noise_test(&d, &random_physical(&mut r), 2.0, 201).unwrap();
        assert!((report.rows[0].rate - noise_rate_at_zero(&d)).abs() < 1e-6);
        assert!((report.rows[0].anchored_rate - noise_rate_at_zero(&d)).abs() < 1e-6);
    }
}

#[test]
fn boundary_screen_saturates() {
    for g in [0.05_f64, 0.3, -0.7] {
        let d = dynamics(Matrix2::identity() * (2.0 * g.abs()), g);
        let report = run_noise_test(&d, &CovarianceMatrix::vacuum(), 3.0, 301).unwrap();
        let rate0 = report.rows[0].rate;
        assert!(((rate0 - 2.0 * g.abs()) / (2.0 * g.abs())).abs() < 1e-6);
        assert!(report.all_pass());
    }
}

#[test]
fn slightly_weak_screen_is_detected() {
    let g = 0.4;
    let eps = 0.1;
    let d = dynamics(Matrix2::identity() * (2.0 * g * (1.0 - eps)), g);
    let report = run_noise_test(&d, &CovarianceMatrix::vacuum(), 1.0, 101).unwrap();
    assert!((report.rows[0].rate - 2.0 * g * (1.0 - eps)).abs() < 1e-6);
    assert!(!report.rows[0].verdict);
}

#[test]
fn zero_coupling_always_passes() {
    let mut r = rng(32);
    for _ in 0..20 {
        let y = random_classical_noise(&mut r, 0.3);
        let report = run_noise_test(&dynamics(y, 0.0), &random_physical(&mut r), 10.0, 501).unwrap();
        assert!(report.all_pass());
        assert!(report.min_anchored_rate() >= -1e-9);
    }
}

#[test]
fn reflecting_mode_b_flips_coupling_sign() {
    let p = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -1.0, -1.0));
    let mut r = rng(33);
    for _ in 0..20 {
        let g = random_coupling(&mut r, 0.05, 0.9);
        let y = random_classical_noise(&mut r, g);
        let g0 = random_physical(&mut r);
        let a = run_noise_test(&dynamics(y, g), &g0, 4.0, 81).unwrap();
        // (x_b, p_b) → −(x_b, p_b) also flips the sign of Y_xp = ⟨{x_a-kick, x_b-kick}⟩.
        let flip = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let b = run_noise_test(&dynamics(flip * y * flip, -g), &g0.congruence(&p), 4.0, 81).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((ra.excess - rb.excess).abs() < 1e-10);
            assert!((ra.rate - rb.rate).abs() < 1e-8);
            assert_eq!(ra.verdict, rb.verdict);
        }
    }
}

#[test]
fn anchored_rate_is_excess_derivative_and_can_dip() {
    // Boundary screen with noise only in Y_xx and Y_pp, weak coupling: the
    // anchored benchmark's rate oscillates as cos² t at leading order.
    let g = 0.05;
    let d = dynamics(Matrix2::identity() * (2.0 * g), g);
    let report = run_noise_test(&d, &CovarianceMatrix::vacuum(), 4.0, 401).unwrap();
    let h = 0.01;
    for k in 1..report.rows.len() - 1 {
        let fd = (report.rows[k + 1].excess - report.rows[k - 1].excess) / (2.0 * h);
        assert!((fd - report.rows[k].anchored_rate).abs() < 1e-4);
    }
    assert!(report.all_pass());
    assert!(report.min_anchored_rate() < report.bound);
}

#[test]
fn excess_of_a_propagated_state_is_anchored_noise() {
    let g = 0.2;
    let y = Matrix2::new(0.5, 0.1, 0.1, 0.6);
    let d = dynamics(y, g);
    let g0 = random_physical(&mut rng(34));
    let t = 2.5;
    let full = propagate(&g0, &d, t).unwrap();
    let rev = noisebound_core::propagate_reversible(&g0, &d, t);
    let p = d.propagator(t).unwrap();
    let expected = excess_variance(&CovarianceMatrix::new(p.noise).unwrap(), &CovarianceMatrix::new(Matrix4::zeros()).unwrap());
    assert!((excess_variance(&full, &rev) - expected).abs() < 1e-12);
}
