use critsense::hilbert::{evolve_pure, Propagator};
use critsense::models::{build_lmg, build_opo, build_qrm_effective, commutator_residual};
use critsense::openquantum::NoiseSpec;
use critsense::oracle::{det, moments_evolve, MomentState, QuadraticForm};
use critsense::protocols::{
    canonical_initial_state, fractional_ratio, inverted_variance_closed_form, quadrature_closed_form,
    simulate_quadrature, working_points, BosonState,
};
use critsense::qfi::{generator, qfi_analytic, qfi_generator_full};
use critsense::runner::{fit_powerlaw, read_csv, SweepRecord};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hamiltonians_are_hermitian(g in 0.0f64..0.99, kappa in 0.0f64..0.5, lambda in 1.05f64..3.0) {
        for m in [build_qrm_effective(1.0, g, 24).unwrap(), build_opo(1.0, kappa, 24).unwrap(), build_lmg(0.0, lambda, 24).unwrap()] {
            prop_assert!(m.hamiltonian().hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn commutator_identity_holds(g in 0.1f64..0.9, kappa in 0.05f64..0.4, lambda in 1.1f64..2.5) {
        for m in [build_qrm_effective(1.0, g, 60).unwrap(), build_opo(1.0, kappa, 60).unwrap(), build_lmg(0.0, lambda, 60).unwrap()] {
            prop_assert!(commutator_residual(&m, 0.3).unwrap() < 1e-8);
        }
    }

    #[test]
    fn evolution_preserves_norm(g in 0.0f64..0.95, t in 0.0f64..20.0) {
        let m = build_qrm_effective(1.0, g, 40).unwrap();
        let psi = canonical_initial_state(m.space()).unwrap();
        let out = evolve_pure(&m.hamiltonian(), &psi, t).unwrap();
        let norm: f64 = out.amplitudes().unwrap().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn propagator_composes(g in 0.0f64..0.9, s in 0.0f64..5.0, t in 0.0f64..5.0) {
        let m = build_qrm_effective(1.0, g, 24).unwrap();
        let p = Propagator::new(&m.hamiltonian()).unwrap();
        let lhs = p.unitary(s).compose(&p.unitary(t)).unwrap();
        let err = lhs.minus(&p.unitary(s + t)).unwrap().max_abs();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn quadrature_matches_closed_form(g in 0.3f64..0.9, t in 0.0f64..15.0) {
        let sim = simulate_quadrature(g, 1.0, &BosonState::Canonical, &[t], 100).unwrap();
        let exact = quadrature_closed_form(g, 1.0, t).unwrap();
        prop_assert!((sim[0].var_x - exact.var_x).abs() / exact.var_x < 1e-6);
        prop_assert!((sim[0].mean_x - exact.mean_x).abs() < 1e-6 * exact.mean_x.abs().max(1.0));
    }

    #[test]
    fn symplectic_determinant_is_one(a in -1.0f64..1.0, b in -0.5f64..0.5, c in -1.0f64..1.0, t in 0.0f64..2.0) {
        let qf = QuadraticForm::new([[a, b], [b, c]]).unwrap();
        prop_assert!((det(&qf.symplectic(t)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_stay_symmetric(a in 0.1f64..2.0, c in 0.1f64..2.0, t in 0.0f64..10.0) {
        let qf = QuadraticForm::new([[a, 0.0], [0.0, c]]).unwrap();
        let m0 = MomentState::new([0.3, -0.2], [[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let m = moments_evolve(&qf, &m0, t);
        prop_assert!((m.sigma[0][1] - m.sigma[1][0]).abs() < 1e-12);
        prop_assert!(m.satisfies_uncertainty());
    }

    #[test]
    fn generator_is_hermitian(g in 0.1f64..0.95, t in 0.0f64..30.0) {
        let m = build_qrm_effective(1.0, g, 30).unwrap();
        prop_assert!(generator(&m, t).unwrap().hermiticity_residual() < 1e-10);
    }

    #[test]
    fn qfi_is_nonnegative(g in 0.1f64..0.9, t in 0.0f64..10.0) {
        let m = build_qrm_effective(1.0, g, 60).unwrap();
        let psi = canonical_initial_state(m.space()).unwrap();
        prop_assert!(qfi_generator_full(&m, &psi, t).unwrap().value >= 0.0);
        prop_assert!(qfi_analytic(&m, &psi, t).unwrap().value >= 0.0);
    }

    #[test]
    fn closed_form_grows_with_n_squared(g in 0.1f64..0.99, n in 1usize..6) {
        let f1 = inverted_variance_closed_form(g, 1).unwrap();
        let fn_ = inverted_variance_closed_form(g, n).unwrap();
        prop_assert!((fn_ / f1 - (n * n) as f64).abs() < 1e-9 * (n * n) as f64);
    }

    #[test]
    fn noise_rates_must_be_nonnegative(rate in -10.0f64..-1e-9) {
        prop_assert!(NoiseSpec::new(rate, 0.0, 0.0, 0.0).is_err());
        prop_assert!(NoiseSpec::new(0.0, 0.0, rate, 0.0).is_err());
    }

    #[test]
    fn powerlaw_fit_recovers_exponent(alpha in -5.0f64..5.0, scale in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = (1..=6).map(|i| {
            let x = 0.1 * i as f64;
            (x, scale * x.powf(alpha))
        }).collect();
        let fit = fit_powerlaw(&pts).unwrap();
        prop_assert!((fit.exponent - alpha).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e300f64..1e300, 8), cutoff in 2usize..1000, converged in any::<bool>()) {
        let r = SweepRecord {
            model: "qrm_effective".into(),
            g_or_lambda: values[0],
            delta: values[1],
            eta: Some(values[2]),
            time: values[3],
            n: 1,
            mean: values[4],
            variance: values[5],
            chi: values[6],
            inv_var: values[7],
            qfi_analytic: None,
            qfi_exact: Some(values[0] * 0.5),
            cutoff,
            converged,
            ratio: None,
            dephasing: Some(0.05),
        };
        let mut buf = Vec::new();
        critsense::runner::record::write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![r]);
    }
}

#[test]
fn working_points_sit_at_half_integer_ratio() {
    for wp in working_points(12, 1.0) {
        assert!((fractional_ratio(wp.g_o) - 0.5).abs() < 1e-9, "m = {}", wp.m);
    }
}
