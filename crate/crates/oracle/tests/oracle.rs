use nalgebra::{Matrix2, Matrix4};
use noisebound_core::gaussian::{Tolerances, C64};
use noisebound_core::screen::{check_constraints, CouplingConvention, DisplacementScreen, KrausScreen};
use noisebound_core::{build_dynamics, propagate, CovarianceMatrix};
use noisebound_oracle::dense::dense_reduced_step;
use noisebound_oracle::mode::TruncatedMode;
use noisebound_oracle::*;
use proptest::prelude::*;

const APPENDIX: CouplingConvention = CouplingConvention::Appendix;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn displacement(uu: f64, vv: f64, uv: f64) -> OracleScreen {
    OracleScreen::Displacement(DisplacementScreen::new(uu, vv, uv).unwrap())
}

#[test]
fn covariance_of_vacuum_and_coherent_states() {
    let vac = covariance_of(&FockState::vacuum(&[30, 30])).unwrap();
    assert!((vac.matrix() - Matrix4::identity()).abs().max() < 1e-10);
    let coh = covariance_of(&FockState::coherent(&[30, 30], &[c(0.8, 0.0), c(0.0, 0.0)]).unwrap()).unwrap();
    assert!((coh.matrix() - Matrix4::identity()).abs().max() < 1e-10);
}

#[test]
fn covariance_of_squeezed_vacuum() {
    let r = 0.2_f64;
    let sq = FockState::pure(&TruncatedMode::new(30).unwrap().squeezed_vacuum(r), vec![30]).unwrap();
    let state = sq.tensor(&FockState::vacuum(&[30])).unwrap();
    let g = covariance_of(&state).unwrap();
    let expected = Matrix4::from_diagonal(&nalgebra::Vector4::new((2.0 * r).exp(), (-2.0 * r).exp(), 1.0, 1.0));
    assert!((g.matrix() - expected).abs().max() < 1e-6);
}

#[test]
fn identity_screen_moments() {
    let m = moments_numeric(&OracleScreen::Identity, &FockState::vacuum(&[30]), APPENDIX).unwrap();
    assert!((m.moments.eta - 1.0).abs() < 1e-12);
    assert!(m.moments.xi.abs() < 1e-12);
    assert!(m.moments.y.abs().max() < 1e-12);
    assert!(m.converges());
}

#[test]
fn displacement_moments_match_closed_form() {
    for (uu, vv, uv) in [(0.3, 0.3, 0.0), (0.25, 0.0, 0.0), (0.2, 0.5, -0.15), (0.0, 0.4, 0.0)] {
        let screen = DisplacementScreen::new(uu, vv, uv).unwrap();
        let m = moments_numeric(&OracleScreen::Displacement(screen), &FockState::vacuum(&[30]), APPENDIX).unwrap();
        let closed = screen.moments(APPENDIX);
        assert!((m.moments.y - closed.y).abs().max() < 1e-6, "{:?} vs {:?}", m.moments.y, closed.y);
        assert!((m.moments.eta - closed.eta).abs() < 1e-6);
        assert!(m.moments.nu_a.abs() < 1e-6 && m.moments.nu_b.abs() < 1e-6 && m.moments.xi.abs() < 1e-6);
        assert!(m.converges());
    }
}

#[test]
fn displacement_moments_do_not_depend_on_carrier_state() {
    let screen = displacement(0.2, 0.3, 0.05);
    let vac = moments_numeric(&screen, &FockState::vacuum(&[60]), APPENDIX).unwrap();
    let hot = moments_numeric(&screen, &FockState::thermal(60, 1.0).unwrap(), APPENDIX).unwrap();
    let coh = moments_numeric(&screen, &FockState::coherent(&[60], &[c(0.7, -0.3)]).unwrap(), APPENDIX).unwrap();
    for other in [&hot, &coh] {
        assert!((other.moments.y - vac.moments.y).abs().max() < 1e-6);
        assert!((other.moments.eta - vac.moments.eta).abs() < 1e-6);
        assert!(other.converges());
    }
}

#[test]
fn amplitude_damping_contracts_means() {
    let screen = OracleScreen::Kraus(KrausScreen::amplitude_damping(0.9, 20).unwrap());
    let displaced = moments_numeric(&screen, &FockState::coherent(&[20], &[c(1.0, 0.0)]).unwrap(), APPENDIX).unwrap();
    let expected = (0.9_f64.sqrt() - 1.0) * 2f64.sqrt();
    assert!((displaced.mean_shift[0] - expected).abs() < 1e-8);
    assert!(!displaced.converges());
    // On the vacuum the means vanish, so the same screen passes there: the
    // constraint is a property of (screen, ρ_f), not of the screen alone.
    let vac = moments_numeric(&screen, &FockState::vacuum(&[20]), APPENDIX).unwrap();
    assert!(vac.converges());
    // Loss acts unequally on the two back-actions.
    let report = check_constraints(&vac.moments, &Tolerances::default());
    assert!(!report.ehrenfest);
    assert!((vac.moments.xi.abs() - (1.0 - 0.9_f64.sqrt())).abs() < 1e-8, "{}", vac.moments.xi);
}

#[test]
fn factorized_step_matches_dense_three_mode_step() {
    let screen = displacement(0.2, 0.3, 0.1);
    for conv in [CouplingConvention::Appendix, CouplingConvention::MainText] {
        let circuit = Circuit::with_kraus([4, 4], 12, screen.kraus_with_nodes(12, 5).unwrap(), -0.4).unwrap().with_convention(conv);
        let state = FockState::coherent(&[4, 4], &[c(0.3, 0.1), c(-0.2, 0.2)]).unwrap();
        let fast = circuit.reduced_step(&state, 0.09).unwrap().state;
        let dense = dense_reduced_step(&circuit, &state, 0.09).unwrap();
        assert!(fast.trace_distance(&dense) < 1e-12);
    }
    let ad = KrausScreen::amplitude_damping(0.8, 10).unwrap().ops().to_vec();
    let circuit = Circuit::with_kraus([4, 5], 10, ad, 0.6).unwrap();
    let state = FockState::coherent(&[4, 5], &[c(0.5, 0.0), c(0.0, 0.4)]).unwrap();
    let fast = circuit.reduced_step(&state, 0.2).unwrap().state;
    assert!(fast.trace_distance(&dense_reduced_step(&circuit, &state, 0.2).unwrap()) < 1e-12);
}

#[test]
fn gauss_hermite_screen_step_preserves_trace() {
    let circuit = Circuit::new([8, 8], 24, &displacement(0.3, 0.2, 0.1), 0.3).unwrap();
    let state = FockState::coherent(&[8, 8], &[c(0.3, 0.0), c(0.0, -0.2)]).unwrap();
    let out = circuit.reduced_step(&state, 0.05).unwrap();
    assert!((out.state.trace() - c(1.0, 0.0)).norm() < 1e-10);
    assert!(out.min_eigenvalue.unwrap() > -1e-8);
    assert!(out.warnings.is_empty(), "{:?}", out.warnings);
}

#[test]
fn zero_step_is_identity_map() {
    let circuit = Circuit::new([6, 6], 16, &displacement(0.3, 0.3, 0.0), 0.5).unwrap();
    let state = FockState::coherent(&[6, 6], &[c(0.4, 0.0), c(0.1, 0.1)]).unwrap();
    let out = circuit.reduced_step(&state, 0.0).unwrap();
    assert!(out.state.trace_distance(&state) < 1e-12);
}

#[test]
fn identity_screen_step_is_gate_times_rotation() {
    let d = 8;
    let circuit = Circuit::new([d, d], 20, &OracleScreen::Identity, 0.7).unwrap();
    let state = FockState::coherent(&[d, d], &[c(0.3, 0.2), c(-0.1, 0.4)]).unwrap();
    let tau = 0.04;
    let out = circuit.reduced_step(&state, tau).unwrap().state;
    let m = TruncatedMode::new(d).unwrap();
    let dims = [d, d];
    let hl = linalg::embed(&m.oscillator(), 0, &dims) + linalg::embed(&m.oscillator(), 1, &dims);
    let xx = linalg::embed(m.x_op(), 0, &dims) * linalg::embed(m.x_op(), 1, &dims) * c(0.7, 0.0);
    let u = linalg::HermitianEigen::new(&xx).propagator(tau) * linalg::HermitianEigen::new(&hl).propagator(tau);
    let expected = FockState::new(&u * state.rho() * u.adjoint(), vec![d, d]).unwrap();
    assert!(out.trace_distance(&expected) < 1e-10);
}

#[test]
fn gate_identity_at_default_truncation() {
    let states = [(c(0.0, 0.0), c(0.0, 0.0)), (c(1.0, 0.0), c(0.0, 0.0)), (c(0.5, 0.5), c(0.0, -0.7))];
    let check = gate_identity_check(0.1, 25, &states, APPENDIX).unwrap();
    assert!(check.max_deviation() < 1e-8);
    // The reversed-sign exchange is far away, so the sign is resolved.
    assert!(check.opposite_sign.iter().all(|d| *d > 0.05));
    let zero = gate_identity_check(0.0, 16, &states, APPENDIX).unwrap();
    assert!(zero.max_deviation() < 1e-13);
}

#[test]
fn gate_truncation_error_decreases_with_dimension() {
    let states = [(c(1.0, 0.0), c(0.0, 1.0))];
    let devs: Vec<f64> =
        [6, 8, 10, 12].iter().map(|&d| gate_identity_check(0.1, d, &states, APPENDIX).unwrap().max_deviation()).collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

#[test]
fn trotter_distance_shrinks_like_one_over_n() {
    let d = 8;
    let circuit = Circuit::new([d, d], 16, &displacement(0.2, 0.2, 0.0), 0.4).unwrap();
    let state = FockState::coherent(&[d, d], &[c(0.3, 0.0), c(0.0, 0.0)]).unwrap();
    let runs: Vec<FockState> = [8, 16, 32, 64].iter().map(|&n| circuit.trotter_evolve(&state, 1.0, n).unwrap().state).collect();
    let gaps: Vec<f64> = runs.windows(2).map(|w| w[0].trace_distance(&w[1])).collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 1.6 && ratio < 2.4, "{gaps:?}");
    }
}

#[test]
fn trotter_covariance_tracks_gaussian_propagation() {
    let screen = DisplacementScreen::new(0.15, 0.2, 0.05).unwrap();
    let g = 0.15;
    let circuit = Circuit::new([14, 14], 24, &OracleScreen::Displacement(screen), g).unwrap();
    let [ca, cb] = circuit.coupling_strengths();
    let moments = scale_moments(&screen.moments(APPENDIX), ca, cb);
    assert!((moments.eta - g).abs() < 1e-15);
    let dynamics = build_dynamics(&moments, true).unwrap();
    let exact = propagate(&CovarianceMatrix::vacuum(), &dynamics, 1.0).unwrap();
    let out = circuit.trotter_evolve(&FockState::vacuum(&[14, 14]), 1.0, 64).unwrap();
    let dev = (covariance_of(&out.state).unwrap().matrix() - exact.matrix()).abs().max();
    assert!(dev < 3e-3, "{dev}");
}

#[test]
fn identity_coupling_fit_main_text_order() {
    let fit = fit_identity_coupling(&CouplingFitOptions {
        dim: 8,
        steps: [32, 64, 128],
        convention: CouplingConvention::MainText,
        ..Default::default()
    })
    .unwrap();
    assert!((fit.extrapolated + 1.0).abs() < 1e-3, "{fit:?}");
}

#[test]
fn generator_extraction_matches_adjoint_channel() {
    let screen = displacement(0.2, 0.3, 0.1);
    let kraus = screen.kraus_with_nodes(24, 9).unwrap();
    let circuit = Circuit::with_kraus([4, 4], 24, kraus.clone(), 1.0).unwrap();
    let fit = extract_generator(&circuit, 0.2, 4, 3).unwrap();
    let direct = moments::moments_from_kraus(&kraus, &FockState::vacuum(&[24]), APPENDIX).unwrap();
    assert!(fit.sqrt_tau_coefficient < 1e-5);
    assert!((fit.moments.y - direct.moments.y).abs().max() < 1e-4);
    assert!((fit.moments.eta - direct.moments.eta).abs() < 1e-4);
    assert!(fit.moments.nu_a.abs() < 1e-4 && fit.moments.nu_b.abs() < 1e-4 && fit.moments.xi.abs() < 1e-4);
    for (a, b) in fit.coefficients.to_array().iter().zip(direct.coefficients.to_array()) {
        assert!((a - b).norm() < 1e-4);
    }
}

#[test]
fn sqrt_tau_term_survives_when_means_move() {
    let ad = KrausScreen::amplitude_damping(0.9, 16).unwrap().ops().to_vec();
    let carrier = FockState::coherent(&[16], &[c(0.8, 0.0)]).unwrap();
    let circuit = Circuit::with_kraus([3, 3], 16, ad.clone(), 1.0).unwrap().with_carrier_state(&carrier).unwrap();
    let fit = extract_generator(&circuit, 0.2, 3, 3).unwrap();
    let shift = moments::moments_from_kraus(&ad, &carrier, APPENDIX).unwrap().mean_shift;
    // L₁ = i[(a − a')⟨S†x − x⟩ + (b − b')⟨S†p − p⟩]; the largest sample has |a − a'| = 2.
    assert!((fit.sqrt_tau_coefficient - 2.0 * shift[0].abs()).abs() < 1e-6, "{} vs {:?}", fit.sqrt_tau_coefficient, shift);

    let vac = Circuit::with_kraus([3, 3], 16, ad, 1.0).unwrap();
    assert!(extract_generator(&vac, 0.2, 3, 3).unwrap().sqrt_tau_coefficient < 1e-5);
}

#[test]
fn leakage_is_reported() {
    // A wide kick on a tiny carrier pushes population into the top levels.
    let circuit = Circuit::new([4, 4], 6, &displacement(1.5, 1.5, 0.0), 0.5).unwrap();
    let out = circuit.reduced_step(&FockState::vacuum(&[4, 4]), 0.1).unwrap();
    assert!(out.fc_edge_population > 1e-4);
    assert!(!out.warnings.is_empty());
}

#[test]
fn unit_coupling_scaling() {
    let m = scale_moments(&DisplacementScreen::symmetric(0.2).unwrap().moments(APPENDIX), 0.5, -0.5);
    assert!((m.eta + 0.25).abs() < 1e-15);
    assert!((m.y - Matrix2::new(0.1, 0.0, 0.0, 0.1)).abs().max() < 1e-15);
}

fn kick() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..0.4f64, 0.0..0.4f64, -1.0..1.0f64).prop_map(|(a, b, r)| (a, b, r * (a * b).sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_displacement_moments((uu, vv, uv) in kick()) {
        let screen = DisplacementScreen::new(uu, vv, uv).unwrap();
        let m = moments_numeric(&OracleScreen::Displacement(screen), &FockState::vacuum(&[30]), APPENDIX).unwrap();
        prop_assert!((m.moments.y - screen.moments(APPENDIX).y).abs().max() < 1e-6);
        prop_assert!(m.completeness_defect < 1e-10);
    }

    #[test]
    fn steps_are_trace_preserving_and_positive((uu, vv, uv) in kick(), g in -0.8..0.8f64, tau in 0.001..0.3f64,
                                               a in -0.6..0.6f64, b in -0.6..0.6f64) {
        let screen = OracleScreen::Displacement(DisplacementScreen::new(uu, vv, uv).unwrap());
        let circuit = Circuit::with_kraus([5, 5], 16, screen.kraus_with_nodes(16, 7).unwrap(), g).unwrap();
        let state = FockState::coherent(&[5, 5], &[c(a, 0.1), c(0.0, b)]).unwrap();
        let out = circuit.reduced_step(&state, tau).unwrap();
        prop_assert!((out.state.trace() - c(1.0, 0.0)).norm() < 1e-8);
        prop_assert!(out.min_eigenvalue.unwrap() > -1e-8);
        prop_assert!(out.state.validate().is_ok());
    }
}
