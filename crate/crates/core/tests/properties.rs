use proptest::prelude::*;

use twistflow::diagnostics::{decay_bound_check, fit_exponential_rate};
use twistflow::grid::{integrate_radial, make_grid, Grading};
use twistflow::modulation::{extract_modulation, synthesize_director, ModulationFrame};
use twistflow::profiles::{harmonic_profile, make_test_perturbation, rotated_scaled_profile, PerturbationKind};

fn grading() -> impl Strategy<Value = Grading> {
    prop_oneof![Just(Grading::Uniform), Just(Grading::GeometricNearAxis)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn radial_quadrature_is_exact_for_linear_integrands(
        r_max in 0.5..40.0f64, n in 16usize..400, a in -3.0..3.0f64, b in -3.0..3.0f64, g in grading()
    ) {
        let grid = make_grid(r_max, n, g).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|r| a + b * r).collect();
        let exact = a * r_max * r_max / 2.0 + b * r_max.powi(3) / 3.0;
        let got = integrate_radial(&f, &grid).unwrap();
        prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs() + r_max.powi(3)));
    }

    #[test]
    fn harmonic_profile_is_unit_and_monotone(rho in 0.0..1e3f64, m in 3i32..9) {
        let (h1, h3) = harmonic_profile(rho, m).unwrap();
        prop_assert!((h1 * h1 + h3 * h3 - 1.0).abs() < 1e-14);
        prop_assert!(h1 >= 0.0);
        let (_, h3b) = harmonic_profile(rho * 1.01 + 1e-9, m).unwrap();
        prop_assert!(h3b >= h3);
    }

    #[test]
    fn rotated_profile_winds_about_e3(r in 0.01..20.0f64, alpha in -3.0..3.0f64, sigma in 0.1..3.0f64, m in 3i32..7) {
        let v = rotated_scaled_profile(r, alpha, sigma, m).unwrap();
        let u = rotated_scaled_profile(r, 0.0, sigma, m).unwrap();
        prop_assert!((v.z - u.z).abs() < 1e-15);
        prop_assert!((v.x - alpha.cos() * u.x).abs() < 1e-14 && (v.y - alpha.sin() * u.x).abs() < 1e-14);
    }

    #[test]
    fn exponential_rates_are_recovered(rate in -2.0..2.0f64, c in 0.1..10.0f64) {
        let s: Vec<(f64, f64)> = (0..30).map(|k| { let t = 0.1 * k as f64; (t, c * (rate * t).exp()) }).collect();
        let f = fit_exponential_rate(&s, (0.0, 3.0)).unwrap();
        prop_assert!((f.rate - rate).abs() < 1e-12);
    }

    #[test]
    fn exact_power_laws_pass_their_own_decay_check(p in 0.1..2.0f64, c in 1e-6..1.0f64) {
        let s: Vec<(f64, f64)> = (0..40).map(|k| { let t = 0.25 * k as f64; (t, c * (1.0 + t).powf(-p)) }).collect();
        let v = decay_bound_check(&s, -p, true).unwrap();
        prop_assert!(v.pass);
        prop_assert!((v.c_min / c - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn modulation_round_trip(
        sigma in 0.3..1.5f64, theta in -3.0..3.0f64, log_amp in -4.0..-1.5f64, seed in any::<u64>(), m in 3i32..6
    ) {
        let g = make_grid(25.0, 200, Grading::GeometricNearAxis).unwrap();
        let z = make_test_perturbation(PerturbationKind::Random { seed }, 10f64.powf(log_amp), &g.scaled(1.0 / sigma), m).unwrap();
        let frame = ModulationFrame::new(sigma, theta, &g, z).unwrap();
        let phi = synthesize_director(&frame, &g, m).unwrap();
        let f = extract_modulation(&phi, &g, m, (sigma * 1.1, theta - 0.1)).unwrap();
        prop_assert!((f.sigma - sigma).abs() < 1e-8 && (f.theta - theta).abs() < 1e-8);
        let dz = f.z.iter().zip(&frame.z).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        prop_assert!(dz < 1e-8);
        prop_assert!(f.orthogonality(m).norm() < 1e-10);
    }
}
