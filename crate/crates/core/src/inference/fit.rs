//! Maximum-likelihood fitting of one isotropic model to one group.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{golden_section, nelder_mead, Minimum, NelderMeadOptions};
use super::{bic_star, log_likelihood, Dataset};
use crate::error::{Error, Result};
use crate::mc::specimen_rng;
use crate::models::{ln_size_and_shape_density, GeneratorSpec, IsotropicVariant, ModelParams};
use crate::zonal::SeriesControl;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Perturbed restarts in addition to the start from the initial point.
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Estimate `σ²` from the sizes after fitting the shape.
    pub estimate_scale: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 3,
            tol: 1e-8,
            max_iter: 5000,
            seed: 0,
            estimate_scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: IsotropicVariant,
    /// Fitted mean, rows of an `n × K` matrix in canonical form `[L 0]`.
    pub mu_hat: Vec<Vec<f64>>,
    pub sigma2_hat: f64,
    /// `μ̂ / σ̂`, the part of the mean the shapes identify.
    pub nu_hat: Vec<Vec<f64>>,
    /// Maximized shape log-likelihood.
    pub loglik: f64,
    pub n_p: usize,
    pub n: usize,
    pub bic_star: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Size-and-shape log-likelihood at the fitted scale.
    pub size_loglik: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    let k = r.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r.len(), k, |i, j| r[i][j])
}

impl FitResult {
    pub fn mu_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.mu_hat)
    }

    pub fn nu_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.nu_hat)
    }
}

/// Canonical representative `[L 0]` of the right-rotation class of `μ`,
/// with `L` lower triangular and `diag(L) ≥ 0`, so that `L Lᵀ = μ μᵀ`.
pub fn canonical_mean(mu: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = mu.shape();
    let qr = mu.transpose().qr();
    let r = qr.r();
    let mut out = DMatrix::zeros(n, k);
    for j in 0..n {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in j..n {
            out[(i, j)] = sign * r[(j, i)];
        }
    }
    out
}

pub(crate) fn nu_from_params(x: &[f64], n: usize, k: usize) -> DMatrix<f64> {
    let mut nu = DMatrix::zeros(n, k);
    let mut it = x.iter();
    for j in 0..n {
        for i in j..n {
            nu[(i, j)] = *it.next().unwrap();
        }
    }
    nu
}

pub(crate) fn params_from_nu(nu: &DMatrix<f64>) -> Vec<f64> {
    let c = canonical_mean(nu);
    let n = c.nrows();
    let mut x = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            x.push(c[(i, j)]);
        }
    }
    x
}

/// Moment-based starting point from the sizes and shapes:
/// `R̄` = mean of `R_i = r_i W_i`, `σ²₀ = (mean r_i² − ‖R̄‖²) / p`, and
/// `ν₀ = [R̄ 0] / σ₀` in canonical form.
pub(crate) fn moment_start(data: &Dataset) -> (DMatrix<f64>, f64) {
    let n = data.dims.n();
    let k = data.dims.coords;
    let mut rbar = DMatrix::zeros(n, n);
    let mut r2 = 0.0;
    for s in &data.specimens {
        rbar += &s.w * s.r;
        r2 += s.r * s.r;
    }
    let m = data.len() as f64;
    rbar /= m;
    r2 /= m;
    let p = (n * (n + 1) / 2) as f64;
    let sigma2 = ((r2 - rbar.norm_squared()).max(1e-3 * r2) / p).max(f64::MIN_POSITIVE);
    let mut mu = DMatrix::zeros(n, k);
    mu.view_mut((0, 0), (n, n)).copy_from(&rbar);
    (canonical_mean(&mu), sigma2)
}

pub(crate) fn initial_steps(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| (0.1 * v.abs()).max(0.1)).collect()
}

/// Nelder–Mead from `x0` and from `restarts` seeded perturbations of it,
/// followed by a final polish from the best point.
pub(crate) fn minimize_with_restarts(
    objective: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    opts: &FitOptions,
) -> Minimum {
    let nm = NelderMeadOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
    };
    let mut best = nelder_mead(&objective, x0, &initial_steps(x0), &nm);
    let mut iterations = best.iterations;
    for r in 0..opts.restarts {
        let mut rng = specimen_rng(opts.seed, r + 1);
        let start: Vec<f64> = x0
            .iter()
            .map(|v| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                v * (1.0 + 0.25 * z1) + 0.1 * z2
            })
            .collect();
        let m = nelder_mead(&objective, &start, &initial_steps(&start), &nm);
        iterations += m.iterations;
        if m.f < best.f {
            best = Minimum {
                iterations: best.iterations,
                ..m
            };
        }
    }
    let polish = nelder_mead(&objective, &best.x, &initial_steps(&best.x), &nm);
    iterations += polish.iterations;
    let converged = polish.converged;
    let best = if polish.f <= best.f { polish } else { best };
    Minimum {
        iterations,
        converged,
        ..best
    }
}

/// Maximizes the shape likelihood over `ν = μ/σ`; returns
/// `(ν̂, ℓ̂, iterations, converged)`. A start where the likelihood cannot be
/// evaluated is shrunk toward the origin until it can; an optimum next to
/// the region where the zonal series does not converge within
/// `ctl.max_degree` is reported as that series error.
pub fn fit_shape_only(
    data: &Dataset,
    variant: IsotropicVariant,
    init_nu: Option<&DMatrix<f64>>,
    ctl: &SeriesControl,
    opts: &FitOptions,
) -> Result<(DMatrix<f64>, f64, usize, bool)> {
    let (n, k) = (data.dims.n(), data.dims.coords);
    let nu0 = match init_nu {
        Some(nu) => nu.clone(),
        None => {
            let (mu, s2) = moment_start(data);
            mu / s2.sqrt()
        }
    };
    let objective = |x: &[f64]| -> f64 {
        let nu = nu_from_params(x, n, k);
        match log_likelihood(data, variant, &nu, 1.0, ctl) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    };
    let mut x0 = params_from_nu(&nu0);
    for _ in 0..40 {
        if objective(&x0).is_finite() {
            break;
        }
        x0.iter_mut().for_each(|v| *v *= 0.7);
    }
    let m = minimize_with_restarts(objective, &x0, opts);
    if !m.f.is_finite() {
        return Err(Error::Data(
            "the shape likelihood is not finite at any starting point".into(),
        ));
    }
    let nu = canonical_mean(&nu_from_params(&m.x, n, k));
    // an optimum pressed against the region where the series cannot be
    // summed is an artifact of the degree cap, not a maximum
    log_likelihood(data, variant, &(&nu * 1.05), 1.0, ctl)?;
    Ok((nu, -m.f, m.iterations, m.converged))
}

fn generator_for(variant: IsotropicVariant, data: &Dataset) -> Result<GeneratorSpec> {
    match variant {
        IsotropicVariant::Gaussian => Ok(GeneratorSpec::gaussian(data.dims)),
        v => GeneratorSpec::kotz(v.t() as f64, 0.5, data.dims),
    }
}

/// Size-and-shape log-likelihood `Σ_i ln f(R_i; σν, σ² I)`.
pub(crate) fn size_log_likelihood(
    data: &Dataset,
    variant: IsotropicVariant,
    nu: &DMatrix<f64>,
    sigma: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    let spec = generator_for(variant, data)?;
    let params = ModelParams::isotropic(nu * sigma, sigma * sigma)?;
    let terms: Vec<Result<f64>> = data
        .specimens
        .par_iter()
        .map(|s| ln_size_and_shape_density(&(&s.w * s.r), &params, &spec, ctl))
        .collect();
    let mut acc = 0.0;
    for (i, t) in terms.into_iter().enumerate() {
        acc += t.map_err(|e| Error::Specimen {
            index: i,
            source: Box::new(e),
        })?;
    }
    Ok(acc)
}

/// Maximum-likelihood fit of an isotropic model.
///
/// The shape likelihood is maximized over `ν = μ/σ` by Nelder–Mead with
/// restarts. With `opts.estimate_scale`, `ln σ` is then chosen by
/// golden-section search on the size-and-shape likelihood at fixed `ν̂`;
/// otherwise `σ²` keeps its starting value. `init` supplies a starting
/// `(μ, σ²)`; by default a moment-based start is used.
pub fn fit_mle(
    data: &Dataset,
    variant: IsotropicVariant,
    init: Option<(&DMatrix<f64>, f64)>,
    ctl: &SeriesControl,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (mu0, s20) = match init {
        Some((mu, s2)) => {
            if mu.shape() != (data.dims.n(), data.dims.coords) || !(s2 > 0.0) {
                return Err(Error::invalid("initial mean has the wrong shape or σ² ≤ 0"));
            }
            (canonical_mean(mu), s2)
        }
        None => moment_start(data),
    };
    let nu0 = &mu0 / s20.sqrt();
    let (nu, loglik, iterations, converged) = fit_shape_only(data, variant, Some(&nu0), ctl, opts)?;

    let (sigma, size_loglik) = if opts.estimate_scale {
        let s0 = s20.sqrt().ln();
        let (s, f) = golden_section(
            |s| match size_log_likelihood(data, variant, &nu, s.exp(), ctl) {
                Ok(v) => -v,
                Err(_) => f64::INFINITY,
            },
            s0 - 4.0,
            s0 + 4.0,
            1e-10,
        );
        (s.exp(), f.is_finite().then_some(-f))
    } else {
        (s20.sqrt(), None)
    };

    let n_p = data.dims.reduced_dim() + 1;
    let mu_hat = &nu * sigma;
    Ok(FitResult {
        variant,
        mu_hat: rows(&mu_hat),
        sigma2_hat: sigma * sigma,
        nu_hat: rows(&nu),
        loglik,
        n_p,
        n: data.len(),
        bic_star: bic_star(loglik, n_p, data.len()),
        iterations,
        converged,
        size_loglik,
    })
}
