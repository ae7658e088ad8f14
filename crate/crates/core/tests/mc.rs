use nalgebra::DMatrix;
use polar_shape::geometry::*;
use polar_shape::mc::*;
use polar_shape::models::*;
use polar_shape::quadrature::QuadratureSpec;
use polar_shape::zonal::SeriesControl;
use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma};

fn dims(n: usize, k: usize) -> Dims {
    Dims::new(n, k).unwrap()
}

fn mu0() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8])
}

fn config(spec: GeneratorSpec, mu: DMatrix<f64>, sigma2: f64, n: usize, seed: u64) -> SamplerConfig {
    SamplerConfig {
        spec,
        params: ModelParams::isotropic(mu, sigma2).unwrap(),
        n,
        seed,
    }
}

fn reduced_angles(ys: &[DMatrix<f64>]) -> Vec<Vec<f64>> {
    ys.iter()
        .map(|y| {
            let f = polar_decompose(&CenteredConfig { y: y.clone() }).unwrap();
            shape_of(&f.r).unwrap().u
        })
        .collect()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-9,
        abs_tol: 1e-13,
        max_depth: 40,
    }
}

#[test]
fn sampler_is_deterministic_and_thread_independent() {
    let cfg = config(GeneratorSpec::gaussian(dims(3, 2)), mu0(), 0.3, 200, 17);
    let a = sample_landmarks(&cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| sample_landmarks(&cfg).unwrap());
    assert_eq!(a, b);
    let c = sample_landmarks(&SamplerConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn central_gaussian_squared_norm_is_chi_square() {
    let cfg = config(GeneratorSpec::gaussian(dims(3, 2)), DMatrix::zeros(2, 2), 1.0, 10_000, 3);
    let norms: Vec<f64> = sample_reduced(&cfg).unwrap().iter().map(|y| y.norm_squared()).collect();
    let chi = ChiSquared::new(4.0).unwrap();
    let ks = ks_test(&norms, |x| chi.cdf(x));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn kotz_squared_radius_is_gamma() {
    // ρ² ~ Gamma(T − 1 + nK/2, rate R)
    let spec = GeneratorSpec::kotz(2.0, 0.5, dims(3, 2)).unwrap();
    let cfg = config(spec, DMatrix::zeros(2, 2), 1.0, 10_000, 4);
    let norms: Vec<f64> = sample_reduced(&cfg).unwrap().iter().map(|y| y.norm_squared()).collect();
    let g = Gamma::new(3.0, 0.5).unwrap();
    let ks = ks_test(&norms, |x| g.cdf(x));
    assert!(ks.p_value > 0.01, "{ks:?}");
    let chi = ChiSquared::new(4.0).unwrap();
    assert!(ks_test(&norms, |x| chi.cdf(x)).p_value < 1e-6);
}

#[test]
fn landmark_sample_mean_matches_centred_mean() {
    let mu_x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, -1.0, -0.5, 1.0, -0.5]);
    let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
    let params = ModelParams::from_landmark_model(&mu_x, &(DMatrix::identity(3, 3) * 0.2), &theta).unwrap();
    let cfg = SamplerConfig {
        spec: GeneratorSpec::gaussian(dims(3, 2)),
        params,
        n: 10_000,
        seed: 5,
    };
    let xs = sample_landmarks(&cfg).unwrap();
    let n = xs.len() as f64;
    let mut mean = DMatrix::zeros(3, 2);
    for x in &xs {
        mean += x.values();
    }
    mean /= n;
    for i in 0..3 {
        for j in 0..2 {
            let var = xs.iter().map(|x| (x.values()[(i, j)] - mean[(i, j)]).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean[(i, j)] - mu_x[(i, j)]).abs() < 3.0 * se, "entry ({i},{j})");
        }
        assert!(xs[0].values().row_sum().norm() < 1e-12);
    }
}

#[test]
fn sampled_shapes_are_similarity_invariant() {
    let cfg = config(GeneratorSpec::gaussian(dims(3, 2)), mu0(), 0.2, 50, 6);
    let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
    for x in sample_landmarks(&cfg).unwrap() {
        let (s, _) = shape_from_landmarks(&x, None).unwrap();
        let moved = x.values() * &rot * 3.5 + DMatrix::from_fn(3, 2, |_, j| [2.0, -7.0][j]);
        let (t, _) = shape_from_landmarks(&LandmarkMatrix::new(moved).unwrap(), None).unwrap();
        assert!((&s.w - &t.w).norm() < 1e-10);
    }
}

#[test]
fn shape_densities_integrate_to_one() {
    let d = dims(3, 2);
    let ctl = SeriesControl::default();
    let params = ModelParams::isotropic(mu0(), 0.5).unwrap();
    let kotz = GeneratorSpec::kotz(2.0, 0.5, d).unwrap();
    let central = |s: &PolarShape| central_shape_density(s, &params);
    let gauss = |s: &PolarShape| gaussian_shape_density(s, &params, &ctl);
    let kotz_f = |s: &PolarShape| kotz_shape_density(s, &params, &kotz, &ctl);
    for (name, f) in [
        ("central", &central as &ShapeDensity<'_>),
        ("gaussian", &gauss),
        ("kotz", &kotz_f),
    ] {
        let total = normalization_check(f, d, &quad()).unwrap();
        assert!((total - 1.0).abs() < 1e-5, "{name}: {total}");
    }
    let full = ModelParams::full(mu0() * 0.6, DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5])).unwrap();
    let central_full = |s: &PolarShape| central_shape_density(s, &full);
    let gauss_full = |s: &PolarShape| gaussian_shape_density(s, &full, &ctl);
    let kotz_full = |s: &PolarShape| kotz_shape_density(s, &full, &kotz, &ctl);
    for (name, f) in [
        ("central, full Σ", &central_full as &ShapeDensity<'_>),
        ("gaussian, full Σ", &gauss_full),
        ("kotz, full Σ", &kotz_full),
    ] {
        let total = normalization_check(f, d, &quad()).unwrap();
        assert!((total - 1.0).abs() < 1e-5, "{name}: {total}");
    }
    // K > n, where |W|^{K−n} enters
    let d3 = dims(3, 3);
    let mu3 = DMatrix::from_row_slice(2, 3, &[0.8, 0.2, -0.3, 0.1, 0.7, 0.4]);
    let params3 = ModelParams::isotropic(mu3, 0.4).unwrap();
    let kotz3 = GeneratorSpec::kotz(3.0, 0.5, d3).unwrap();
    let central3 = |s: &PolarShape| central_shape_density(s, &params3);
    let gauss3 = |s: &PolarShape| gaussian_shape_density(s, &params3, &ctl);
    let kotz3_f = |s: &PolarShape| kotz_shape_density(s, &params3, &kotz3, &ctl);
    for (name, f) in [
        ("central, K = 3", &central3 as &ShapeDensity<'_>),
        ("gaussian, K = 3", &gauss3),
        ("kotz, K = 3", &kotz3_f),
    ] {
        let total = normalization_check(f, d3, &quad()).unwrap();
        assert!((total - 1.0).abs() < 1e-5, "{name}: {total}");
    }
    let doubled = |s: &PolarShape| Ok(2.0 * central_shape_density(s, &params)?);
    let total = normalization_check(&doubled, d, &quad()).unwrap();
    assert!((total - 2.0).abs() < 2e-5);
    assert!(normalization_check(&central, dims(4, 3), &quad()).is_err());
}

#[test]
fn sampled_angles_fit_analytic_densities() {
    let d = dims(3, 2);
    let ctl = SeriesControl::default();
    let params = ModelParams::isotropic(mu0(), 0.3).unwrap();
    let binning = Binning::default();
    let spec = quad();

    let gauss_cfg = config(GeneratorSpec::gaussian(d), mu0(), 0.3, 20_000, 7);
    let angles = reduced_angles(&sample_reduced(&gauss_cfg).unwrap());
    let f = |s: &PolarShape| gaussian_shape_density(s, &params, &ctl);
    let gof = empirical_vs_analytic(&angles, &f, &binning, &spec).unwrap();
    assert!(gof.p_value > 0.01, "{gof:?}");

    // a different mean is detected
    let other = ModelParams::isotropic(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.3]), 0.3).unwrap();
    let g = |s: &PolarShape| gaussian_shape_density(s, &other, &ctl);
    assert!(empirical_vs_analytic(&angles, &g, &binning, &spec).unwrap().p_value < 1e-6);

    let kotz = GeneratorSpec::kotz(2.0, 0.5, d).unwrap();
    let kotz_cfg = config(kotz.clone(), mu0(), 0.3, 20_000, 8);
    let angles = reduced_angles(&sample_reduced(&kotz_cfg).unwrap());
    let f = |s: &PolarShape| kotz_shape_density(s, &params, &kotz, &ctl);
    let gof = empirical_vs_analytic(&angles, &f, &binning, &spec).unwrap();
    assert!(gof.p_value > 0.01, "{gof:?}");

    assert!(empirical_vs_analytic(&angles[..500], &f, &binning, &spec).is_err());
}

#[test]
fn central_shapes_agree_across_generators() {
    let d = dims(3, 2);
    let zero = DMatrix::zeros(2, 2);
    let a = reduced_angles(&sample_reduced(&config(GeneratorSpec::gaussian(d), zero.clone(), 1.0, 20_000, 9)).unwrap());
    let kotz = GeneratorSpec::kotz(2.0, 0.5, d).unwrap();
    let b = reduced_angles(&sample_reduced(&config(kotz, zero, 1.0, 20_000, 10)).unwrap());
    let binning = Binning::default();
    let same = two_sample_chi2(&a, &b, &binning).unwrap();
    assert!(same.p_value > 0.01, "{same:?}");

    let c = reduced_angles(&sample_reduced(&config(GeneratorSpec::gaussian(d), mu0(), 0.3, 20_000, 11)).unwrap());
    assert!(two_sample_chi2(&a, &c, &binning).unwrap().p_value < 1e-6);
}

#[test]
fn disjoint_seeds_give_the_same_verdict() {
    let d = dims(3, 2);
    let ctl = SeriesControl::default();
    let params = ModelParams::isotropic(mu0(), 0.3).unwrap();
    let f = |s: &PolarShape| gaussian_shape_density(s, &params, &ctl);
    let mut stats = Vec::new();
    for seed in [100, 200] {
        let cfg = config(GeneratorSpec::gaussian(d), mu0(), 0.3, 5_000, seed);
        let angles = reduced_angles(&sample_reduced(&cfg).unwrap());
        let gof = empirical_vs_analytic(&angles, &f, &Binning::default(), &quad()).unwrap();
        assert!(gof.p_value > 0.01, "{gof:?}");
        stats.push(gof.statistic);
    }
    assert_ne!(stats[0], stats[1]);
}

#[test]
fn size_and_shape_densities_integrate_to_one_by_importance_sampling() {
    let ctl = SeriesControl::default();
    let mu3 = DMatrix::from_row_slice(2, 3, &[0.8, 0.2, -0.3, 0.1, 0.7, 0.4]);
    let cases = [
        (GeneratorSpec::gaussian(dims(3, 2)), mu0()),
        (GeneratorSpec::kotz(2.0, 0.5, dims(3, 2)).unwrap(), mu0()),
        (GeneratorSpec::gaussian(dims(3, 3)), mu3.clone()),
        (GeneratorSpec::kotz(3.0, 0.5, dims(3, 3)).unwrap(), mu3),
    ];
    for (i, (spec, mu)) in cases.into_iter().enumerate() {
        let params = ModelParams::isotropic(mu.clone(), 0.3).unwrap();
        let cfg = config(spec.clone(), mu, 0.3, 2_000, 20 + i as u64);
        let pilot: Vec<DMatrix<f64>> = sample_reduced(&cfg)
            .unwrap()
            .into_iter()
            .map(|y| polar_decompose(&CenteredConfig { y }).unwrap().r)
            .collect();
        let f = |r: &DMatrix<f64>| size_and_shape_density(r, &params, &spec, &ctl);
        let est = importance_integral(&f, &pilot, 40_000, 30 + i as u64).unwrap();
        assert!(
            (est.estimate - 1.0).abs() < 4.0 * est.std_error && est.std_error < 0.02,
            "{:?} {:?}: {est:?}",
            spec.family,
            spec.dims
        );
    }
}
