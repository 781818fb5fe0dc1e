use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn setup(eta: f64, g: f64, sigma: f64) -> TsvfSetup {
    TsvfSetup::new(eta, g, sigma).unwrap()
}

#[test]
fn setup_validation() {
    assert!(TsvfSetup::new(0.0, 0.1, 1.0).is_err());
    assert!(TsvfSetup::new(PI + 1e-9, 0.1, 1.0).is_err());
    assert!(TsvfSetup::new(1.0, -0.1, 1.0).is_err());
    assert!(TsvfSetup::new(1.0, 0.1, 0.0).is_err());
    assert!(TsvfSetup::new(PI, 0.0, 1.0).is_ok());
}

#[test]
fn weak_value_identical_states() {
    let w = weak_value(&QubitState::ZERO, &QubitState::ZERO, &Observable::pauli_z()).unwrap();
    assert_eq!((w.re, w.im), (1.0, 0.0));
}

#[test]
fn weak_value_of_constructed_states_is_imaginary_cot() {
    for eta in [0.05, 0.2, 1.0, PI / 2.0, 2.5, 3.0] {
        let psi_in = input_state_for_eta(eta).unwrap();
        let w = weak_value(&psi_in, &postselected_state(), &Observable::pauli_y()).unwrap();
        assert_abs_diff_eq!(w.re, 0.0, epsilon = 1e-12);
        assert!(((w.im - 1.0 / (eta / 2.0).tan()) / w.im.abs().max(1.0)).abs() < 1e-12, "{eta}: {w:?}");
        // i (alpha + beta) / (alpha - beta) with psi_in = alpha|0> - beta|1>
        let (alpha, beta) = (psi_in.alpha(), -psi_in.beta());
        assert!(((w.im - (alpha + beta) / (alpha - beta)) / w.im.abs().max(1.0)).abs() < 1e-12);
    }
}

#[test]
fn weak_value_orthogonal_is_error() {
    let e = weak_value(&QubitState::ZERO, &QubitState::ONE, &Observable::pauli_z()).unwrap_err();
    assert!(matches!(e, Error::OrthogonalSelection { .. }));
}

#[test]
fn observable_validation() {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    assert!(Observable::new([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]).is_ok());
    // Hermitian but A^2 != 1
    let e = Observable::new([[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]).unwrap_err();
    assert!(matches!(e, Error::NotInvolutory { .. }));
    let e = Observable::new([[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]).unwrap_err();
    assert!(matches!(e, Error::NotHermitian { .. }));
}

#[test]
fn input_states() {
    let s = input_state_for_eta(PI).unwrap();
    assert_abs_diff_eq!(s.alpha(), FRAC_1_SQRT_2, epsilon = 1e-15);
    assert_abs_diff_eq!(s.beta(), FRAC_1_SQRT_2, epsilon = 1e-15);
    assert_abs_diff_eq!(s.overlap(&postselected_state()).powi(2), 1.0, epsilon = 1e-15);
    let s = input_state_for_eta(PI / 2.0).unwrap();
    assert_abs_diff_eq!(s.alpha(), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(s.beta(), 0.0, epsilon = 1e-15);
    assert!(input_state_for_eta(0.0).is_err());
}

#[test]
fn mean_limits() {
    assert!(mean_fin(&setup(1e-12, 0.1, 2.0)).abs() < 1e-11);
    assert_eq!(mean_fin(&setup(1.0, 0.0, 2.0)), 0.0);
    assert!(mean_fin(&setup(PI, 0.3, 2.0)).abs() < 1e-15);
}

#[test]
fn optimal_eta_values() {
    // arccos(e^-0.02) and 0.2 / sqrt(e^0.04 - 1), evaluated at 30 digits
    let (eta, mmax) = optimal_eta(0.05, 2.0).unwrap();
    assert_abs_diff_eq!(eta, 0.199_334_004_756_253_3, epsilon = 1e-12);
    assert_abs_diff_eq!(mmax / 2.0, 0.990_016_833_078_061, epsilon = 1e-12);
    assert_abs_diff_eq!(mean_fin(&setup(eta, 0.05, 2.0)), 1.980_033_666_156_122, epsilon = 1e-12);
    assert_abs_diff_eq!(mean_fin(&setup(eta, 0.05, 2.0)), mmax, epsilon = 1e-12);
    for d in [-1e-3, 1e-3] {
        assert!(mean_fin(&setup(eta + d, 0.05, 2.0)) <= mmax);
    }
    assert!(optimal_eta(0.0, 2.0).is_err());
    assert!(optimal_eta(1.0, 0.0).is_err());
    let (_, big) = optimal_eta(10.0, 1.0).unwrap();
    assert!(big < 1e-40);
}

#[test]
fn grid_search_confirms_argmax() {
    for (g, sigma) in [(0.05, 2.0), (0.2, 1.0), (0.5, 3.0)] {
        let (eta, mmax) = optimal_eta(g, sigma).unwrap();
        let n = 200_000;
        let (best_eta, best) = (1..=n)
            .map(|k| PI * k as f64 / n as f64)
            .map(|e| (e, mean_fin(&setup(e, g, sigma))))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best_eta - eta).abs() <= 2.0 * PI / n as f64, "{best_eta} vs {eta}");
        assert!(best <= mmax + 1e-12);
    }
}

#[test]
fn second_moment_values() {
    assert_abs_diff_eq!(second_moment_fin(&setup(PI / 2.0, 0.37, 2.0)), 4.0, epsilon = 1e-12);
    let m = second_moment_fin(&setup(1.0, 1e-3, 1.0));
    assert!((m - 1.0).abs() < 1e-5, "{m}");
    let (eta, _) = optimal_eta(0.05, 2.0).unwrap();
    let s = setup(eta, 0.05, 2.0);
    assert_abs_diff_eq!(second_moment_fin(&s) / 4.0, 1.980_133_329_777_913, epsilon = 1e-12);
    // exactly sigma^2 of variance remains at the optimum
    let r = analytic_moments(&s);
    assert_abs_diff_eq!(r.variance / 4.0, 1.0, epsilon = 1e-10);
}

#[test]
fn density_symmetry_cases() {
    let s = setup(1.0, 0.0, 2.0);
    for x in [-3.0, 0.0, 1.5] {
        assert_abs_diff_eq!(needle_density(x, &s), (-x * x / 8.0f64).exp(), epsilon = 1e-15);
    }
    let s = setup(PI, 0.4, 2.0);
    for x in [0.3, 1.0, 4.0] {
        assert_abs_diff_eq!(needle_density(x, &s), needle_density(-x, &s), epsilon = 1e-14);
    }
    assert!(quadrature_moments(&s).unwrap().mean.abs() < 1e-12);
}

#[test]
fn quadrature_zero_coupling_and_right_angle() {
    let q = quadrature_moments(&setup(0.7, 0.0, 3.0)).unwrap();
    assert!(q.mean.abs() < 1e-12);
    assert_abs_diff_eq!(q.second_moment, 9.0, epsilon = 1e-8);
    for g in [0.01, 0.3, 1.0] {
        let q = quadrature_moments(&setup(PI / 2.0, g, 2.0)).unwrap();
        assert_abs_diff_eq!(q.second_moment, 4.0, epsilon = 1e-8);
    }
}

#[test]
fn normalization_matches_mixture_constant() {
    for (eta, g, sigma) in [(0.3, 0.1, 2.0), (2.0, 0.5, 1.0), (1.0, 0.05, 5.0)] {
        let s = setup(eta, g, sigma);
        let z = crate::quadrature::integrate(|x| needle_density(x, &s), -12.0 * sigma, 12.0 * sigma, Default::default())
            .unwrap()
            .value;
        let expected = (s.a_plus() + s.a_minus() * (-2.0 * (g * sigma).powi(2)).exp()) * sigma * (2.0 * PI).sqrt();
        assert!(((z - expected) / expected).abs() < 1e-10);
    }
}

#[test]
fn postselect_weight_identity() {
    for (eta, g, sigma) in [(0.3, 0.1, 2.0), (2.0, 0.5, 1.0), (PI, 1.0, 1.0)] {
        let s = setup(eta, g, sigma);
        for x in [-5.0, -0.2, 0.0, 0.9, 7.0] {
            let via_density = postselect_probability(&s) * needle_density(x, &s) * (x * x / (2.0 * sigma * sigma)).exp();
            assert_abs_diff_eq!(postselect_weight(x, &s), via_density, epsilon = 1e-12);
            assert!(postselect_weight(x, &s) <= 1.0);
        }
    }
}

#[test]
fn acceptance_is_certain_without_coupling_at_eta_pi() {
    let s = setup(PI, 0.0, 1.0);
    assert_abs_diff_eq!(acceptance_probability(&s), 1.0, epsilon = 1e-15);
    let mut rng = RngStream::new(0, 0);
    assert!((0..1000).all(|_| rejection_sample_run(&s, &mut rng).is_some()));
}

#[test]
fn sampler_mean_matches() {
    let s = setup(1.2, 0.2, 2.0);
    let mut rng = RngStream::new(44, 0);
    let xs: Vec<f64> = std::iter::repeat_with(|| rejection_sample_run(&s, &mut rng))
        .flatten()
        .take(100_000)
        .collect();
    let (mean, se) = crate::stats::mean_and_stderr(&xs);
    assert!((mean - mean_fin(&s)).abs() < 3.0 * se, "{mean} vs {}", mean_fin(&s));
}

#[test]
fn separation_trivial_cases() {
    let r = separation_report(1.0, 1.0, 0.1, 2.0).unwrap();
    assert_abs_diff_eq!(r.bayes_error, 0.5, epsilon = 1e-9);
    assert_eq!(r.mean_gap, 0.0);
    let r = separation_report(0.4, 2.0, 0.0, 2.0).unwrap();
    assert_abs_diff_eq!(r.bayes_error, 0.5, epsilon = 1e-9);
    assert_eq!(r.mean_gap, 0.0);
}

#[test]
fn separation_at_optimum() {
    let (eta1, _) = optimal_eta(0.05, 2.0).unwrap();
    let r = separation_report(eta1, 2.0, 0.05, 2.0).unwrap();
    assert_abs_diff_eq!(r.mean_gap / 2.0, 0.990_016_833_078_061 - 0.126_612_396_862_523_5, epsilon = 1e-12);

    // brute-force oracle: fine Simpson rule on min of the two normalized densities
    let s1 = setup(eta1, 0.05, 2.0);
    let s2 = setup(2.0, 0.05, 2.0);
    let n = 2_000_000usize;
    let (lo, hi) = (-24.0, 24.0);
    let h = (hi - lo) / n as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(lo + i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let z1 = simpson(&|x| needle_density(x, &s1));
    let z2 = simpson(&|x| needle_density(x, &s2));
    let oracle = 0.5 * simpson(&|x| (needle_density(x, &s1) / z1).min(needle_density(x, &s2) / z2));
    assert!((r.bayes_error - oracle).abs() < 1e-9, "{} vs {oracle}", r.bayes_error);
}

#[test]
fn gaussian_identities() {
    for (g, sigma) in [(0.01, 1.0), (0.1, 2.0), (0.5, 5.0), (0.05, 5.0)] as [(f64, f64); 4] {
        let k = 2.0 * g;
        let e = (-2.0 * (g * sigma).powi(2)).exp();
        let c = gaussian_expectation(|x| (k * x).cos(), sigma).unwrap();
        let xs = gaussian_expectation(|x| x * (k * x).sin(), sigma).unwrap();
        let x2c = gaussian_expectation(|x| x * x * (k * x).cos(), sigma).unwrap();
        assert!((c - e).abs() < 1e-10);
        assert!((xs - 2.0 * g * sigma * sigma * e).abs() < 1e-10);
        assert!((x2c - sigma * sigma * e * (1.0 - 4.0 * g * g * sigma * sigma)).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn eta_and_mixture_forms_agree(eta in 0.01f64..PI, g in 0.0f64..1.0, sigma in 0.2f64..6.0) {
        let s = setup(eta, g, sigma);
        let scale = sigma.max(1.0);
        prop_assert!((mean_fin(&s) - mean_fin_mixture(&s)).abs() <= 1e-12 * scale * 10.0);
        prop_assert!(((second_moment_fin(&s) - second_moment_fin_mixture(&s)) / (sigma * sigma)).abs() <= 1e-12 * 10.0);
        prop_assert!(mean_fin(&s) >= 0.0);
        let v = analytic_moments(&s).variance;
        prop_assert!(v >= -1e-10);
    }

    #[test]
    fn input_state_normalized_and_postselection(eta in 1e-3f64..=PI) {
        let s = input_state_for_eta(eta).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let p = s.overlap(&postselected_state()).powi(2);
        prop_assert!((p - (eta / 2.0).sin().powi(2)).abs() < 1e-12);
        // (alpha + beta) / (alpha - beta) = cot(eta/2) for psi = alpha|0> - beta|1>
        let (alpha, beta) = (s.alpha(), -s.beta());
        let cot = 1.0 / (eta / 2.0).tan();
        prop_assert!(((alpha + beta) / (alpha - beta) - cot).abs() <= 1e-12 * cot.abs().max(1.0) * 10.0);
    }
}
