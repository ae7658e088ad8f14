use nalgebra::DMatrix;
use polar_shape::geometry::*;
use polar_shape::inference::*;
use polar_shape::mc::{sample_landmarks, SamplerConfig};
use polar_shape::models::*;
use polar_shape::quadrature::{integrate_to_infinity, QuadratureSpec};
use polar_shape::special::ln_gamma;
use polar_shape::zonal::SeriesControl;

fn mu0() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8])
}

fn simulate(variant: IsotropicVariant, mu: DMatrix<f64>, sigma2: f64, n: usize, seed: u64) -> Dataset {
    let d = Dims::new(3, 2).unwrap();
    let spec = match variant {
        IsotropicVariant::Gaussian => GeneratorSpec::gaussian(d),
        v => GeneratorSpec::kotz(v.t() as f64, 0.5, d).unwrap(),
    };
    let cfg = SamplerConfig {
        spec,
        params: ModelParams::isotropic(mu, sigma2).unwrap(),
        n,
        seed,
    };
    Dataset::from_landmarks(&sample_landmarks(&cfg).unwrap(), None).unwrap()
}

fn subset(d: &Dataset, range: std::ops::Range<usize>) -> Dataset {
    Dataset::new(d.specimens[range].to_vec(), d.dims).unwrap()
}

fn quick() -> FitOptions {
    FitOptions {
        restarts: 1,
        ..FitOptions::default()
    }
}

#[test]
fn log_likelihood_is_additive_over_specimens() {
    let ctl = SeriesControl::default();
    let d = simulate(IsotropicVariant::Gaussian, mu0(), 0.2, 40, 1);
    for v in IsotropicVariant::ALL {
        let all = log_likelihood(&d, v, &mu0(), 0.2, &ctl).unwrap();
        let a = log_likelihood(&subset(&d, 0..15), v, &mu0(), 0.2, &ctl).unwrap();
        let b = log_likelihood(&subset(&d, 15..40), v, &mu0(), 0.2, &ctl).unwrap();
        assert!((all - a - b).abs() < 1e-9 * all.abs().max(1.0));
        let mut twice = d.specimens.clone();
        twice.extend(d.specimens.iter().cloned());
        let dd = Dataset::new(twice, d.dims).unwrap();
        let l2 = log_likelihood(&dd, v, &mu0(), 0.2, &ctl).unwrap();
        assert!((l2 - 2.0 * all).abs() < 1e-9 * all.abs().max(1.0));
    }
}

#[test]
fn log_likelihood_matches_general_density_route() {
    let ctl = SeriesControl::default();
    let d = simulate(IsotropicVariant::KotzT2, mu0(), 0.3, 8, 2);
    let params = ModelParams::isotropic(mu0(), 0.3).unwrap();
    for v in IsotropicVariant::ALL {
        let spec = GeneratorSpec::kotz(v.t() as f64, 0.5, d.dims).unwrap();
        let direct: f64 = d
            .specimens
            .iter()
            .map(|s| ln_shape_density_general(s, &params, &spec, &ctl).unwrap())
            .sum();
        let ll = log_likelihood(&d, v, &mu0(), 0.3, &ctl).unwrap();
        assert!((ll - direct).abs() < 1e-7 * direct.abs().max(1.0), "{v:?}: {ll} vs {direct}");
    }
}

#[test]
fn likelihood_depends_on_mean_over_sigma_only() {
    let ctl = SeriesControl::default();
    let d = simulate(IsotropicVariant::Gaussian, mu0(), 0.2, 10, 3);
    let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
    let base = log_likelihood(&d, IsotropicVariant::KotzT3, &mu0(), 0.2, &ctl).unwrap();
    let scaled = log_likelihood(&d, IsotropicVariant::KotzT3, &(mu0() * 3.0), 1.8, &ctl).unwrap();
    let rotated = log_likelihood(&d, IsotropicVariant::KotzT3, &(mu0() * rot), 0.2, &ctl).unwrap();
    assert!((base - scaled).abs() < 1e-9 * base.abs());
    assert!((base - rotated).abs() < 1e-9 * base.abs());
}

#[test]
fn canonical_mean_preserves_gram_matrix() {
    let mu = DMatrix::from_row_slice(2, 3, &[0.4, -1.0, 0.2, 0.7, 0.1, -0.3]);
    let c = canonical_mean(&mu);
    assert!((&c * c.transpose() - &mu * mu.transpose()).norm() < 1e-12);
    assert_eq!(c[(0, 1)], 0.0);
    assert!(c.column(2).norm() == 0.0);
    assert!(c[(0, 0)] >= 0.0 && c[(1, 1)] >= 0.0);
}

#[test]
fn fit_recovers_truth_and_is_order_invariant() {
    let ctl = SeriesControl::default();
    let d = simulate(IsotropicVariant::Gaussian, mu0(), 0.1, 150, 4);
    let fit = fit_mle(&d, IsotropicVariant::Gaussian, None, &ctl, &quick()).unwrap();
    assert!(fit.converged);
    assert_eq!(fit.n_p, 5);
    assert_eq!(fit.n, 150);
    assert!((fit.bic_star - bic_star(fit.loglik, 5, 150)).abs() < 1e-9);
    let truth = canonical_mean(&mu0());
    let err = (fit.mu_matrix() - &truth).norm() / truth.norm();
    assert!(err < 0.1, "relative error {err}");
    assert!((fit.sigma2_hat - 0.1).abs() < 0.02, "{}", fit.sigma2_hat);
    let at_truth = log_likelihood(&d, IsotropicVariant::Gaussian, &mu0(), 0.1, &ctl).unwrap();
    assert!(fit.loglik >= at_truth - 1e-9);

    let mut rev = d.specimens.clone();
    rev.reverse();
    let dr = Dataset::new(rev, d.dims).unwrap();
    let fr = fit_mle(&dr, IsotropicVariant::Gaussian, None, &ctl, &quick()).unwrap();
    assert!((fr.loglik - fit.loglik).abs() < 1e-6);
    assert!((fr.nu_matrix() - fit.nu_matrix()).norm() < 1e-3);

    // restarting at the optimum stays there
    let again = fit_mle(
        &d,
        IsotropicVariant::Gaussian,
        Some((&fit.mu_matrix(), fit.sigma2_hat)),
        &ctl,
        &quick(),
    )
    .unwrap();
    assert!((again.loglik - fit.loglik).abs() < 1e-6);
    assert!((again.nu_matrix() - fit.nu_matrix()).norm() < 1e-3);
}

#[test]
fn identical_groups_give_no_evidence() {
    let ctl = SeriesControl::default();
    let d = simulate(IsotropicVariant::Gaussian, mu0(), 0.2, 30, 5);
    for mode in [H0Sigma::Pooled, H0Sigma::PerGroup] {
        let r = lrt_equal_mean_with(&d, &d, [IsotropicVariant::Gaussian; 2], mode, &ctl, &quick()).unwrap();
        assert!(r.stat < 1e-5, "{mode}: {}", r.stat);
        assert!(r.p_value > 0.99);
        assert_eq!(r.df, 4);
    }
}

#[test]
fn lrt_is_symmetric_and_detects_shifts() {
    let ctl = SeriesControl::default();
    let a = simulate(IsotropicVariant::Gaussian, mu0(), 0.1, 30, 6);
    let shifted = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.3]);
    let b = simulate(IsotropicVariant::Gaussian, shifted, 0.1, 30, 7);
    let ab = lrt_equal_mean(&a, &b, IsotropicVariant::Gaussian, &ctl).unwrap();
    let ba = lrt_equal_mean(&b, &a, IsotropicVariant::Gaussian, &ctl).unwrap();
    assert!((ab.stat - ba.stat).abs() < 1e-3 * ab.stat.max(1.0), "{} vs {}", ab.stat, ba.stat);
    assert!(ab.p_value < 1e-3, "{ab:?}");
    assert_eq!(ab.df_identifiable, 2);
    assert!(ab.loglik_ha >= ab.loglik_h0);
}

#[test]
fn concentrated_data_need_a_higher_degree_cap() {
    let d = simulate(IsotropicVariant::Gaussian, mu0(), 0.05, 30, 6);
    let low = SeriesControl::default();
    // the cap binds near the optimum and is reported, not truncated
    let err = fit_shape_only(&d, IsotropicVariant::Gaussian, None, &low, &quick()).unwrap_err();
    assert!(err.to_string().contains("60"), "{err}");
    let high = SeriesControl {
        max_degree: 150,
        ..SeriesControl::default()
    };
    let fit = fit_mle(&d, IsotropicVariant::Gaussian, None, &high, &quick()).unwrap();
    assert!(fit.loglik.is_finite());
}

#[test]
fn lrt_rejects_mismatched_dimensions() {
    let ctl = SeriesControl::default();
    let a = simulate(IsotropicVariant::Gaussian, mu0(), 0.2, 5, 8);
    let shapes: Vec<PolarShape> = a.specimens.clone();
    let b = Dataset::new(shapes, Dims::new(3, 3).unwrap()).unwrap();
    assert!(lrt_equal_mean(&a, &b, IsotropicVariant::Gaussian, &ctl).is_err());
}

#[test]
fn h0_sigma_round_trips_through_text() {
    for m in [H0Sigma::Pooled, H0Sigma::PerGroup] {
        assert_eq!(m.to_string().parse::<H0Sigma>().unwrap(), m);
    }
    assert!("both".parse::<H0Sigma>().is_err());
}

#[test]
fn chi_square_tail_matches_quadrature() {
    let spec = QuadratureSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_depth: 40,
    };
    for df in 1..=10usize {
        let k = df as f64 / 2.0;
        let pdf = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                ((k - 1.0) * x.ln() - x / 2.0 - k * 2f64.ln() - ln_gamma(k)).exp()
            }
        };
        for x in [0.3, 1.0, 4.0, 9.5, 25.0] {
            let oracle = integrate_to_infinity(pdf, x, 2.0, &spec).unwrap();
            let v = chi2_sf(x, df);
            assert!((v - oracle).abs() < 1e-9 * oracle.max(1e-300) + 1e-14, "df {df}, x {x}: {v} vs {oracle}");
        }
    }
    assert!((chi2_sf(4.0, 4) - 3.0 * (-2.0f64).exp()).abs() < 1e-14);
    assert_eq!(chi2_sf(0.0, 3), 1.0);
}

#[test]
fn bic_star_and_grades() {
    let v = bic_star(70.0, 5, 23);
    assert!((v - (-140.0 + 5.0 * (25.0f64 / 24.0).ln())).abs() < 1e-12);
    assert_eq!(evidence_grade(0.0), EvidenceGrade::Weak);
    assert_eq!(evidence_grade(1.99), EvidenceGrade::Weak);
    assert_eq!(evidence_grade(2.0), EvidenceGrade::Positive);
    assert_eq!(evidence_grade(4.0), EvidenceGrade::Positive);
    assert_eq!(evidence_grade(6.0), EvidenceGrade::Strong);
    assert_eq!(evidence_grade(10.0), EvidenceGrade::Strong);
    assert_eq!(evidence_grade(12.0), EvidenceGrade::VeryStrong);
    assert_eq!(evidence_grade(-12.0), EvidenceGrade::VeryStrong);
}
