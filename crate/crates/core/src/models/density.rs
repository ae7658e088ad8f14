//! Size-and-shape and shape densities.

use nalgebra::DMatrix;

use super::generator::{Generator, GeneratorSpec};
use super::params::{ModelParams, Prepared};
use super::{ln_angle_constant, ln_stiefel_constant};
use crate::error::{Error, Result};
use crate::geometry::{jacobian_j, pair_sum_product, sorted_eigenvalues, PolarShape};
use crate::quadrature::{integrate_to_infinity, QuadratureSpec};
use crate::special::{binomial, falling_factorial, ln_gamma, ln_multivariate_gamma, LogAccumulator, SignedLog};
use crate::zonal::{log_degree_terms, sum_series, MatrixArgument, SeriesControl};

fn check_dims(params: &ModelParams, n: usize) -> Result<()> {
    if params.n() != n {
        return Err(Error::invalid(format!(
            "parameters are for order {} but the argument has order {n}",
            params.n()
        )));
    }
    Ok(())
}

fn positive_eigenvalues(m: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    let ev = sorted_eigenvalues(m);
    if let Some((i, v)) = ev.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            index: i,
            eigenvalue: *v,
        });
    }
    Ok(ev)
}

fn positive_sum(s: SignedLog) -> Result<f64> {
    if s.sign > 0.0 {
        Ok(s.ln_abs)
    } else {
        Err(Error::NonPositiveSeries { sign: s.sign })
    }
}

/// `ln` of the factors shared by all shape densities:
/// `c_V c_w |Σ|^{−K/2} |W|^{K−n} Π(λ_i + λ_j) J(u)`.
fn ln_shape_prefactor(shape: &PolarShape, prep: &Prepared, k: usize) -> Result<f64> {
    let n = shape.n();
    let lam = positive_eigenvalues(&shape.w, "W")?;
    let ln_det_w: f64 = lam.iter().map(|v| v.ln()).sum();
    Ok(ln_stiefel_constant(n, k) + ln_angle_constant(n) - k as f64 / 2.0 * prep.ln_det_sigma
        + (k - n) as f64 * ln_det_w
        + pair_sum_product(&lam).ln()
        + jacobian_j(&shape.u).ln())
}

/// `Σ_t S_t(x) · radial(t)` for the kernel spectrum `x`, skipping the radial
/// factor wherever `S_t` vanishes.
fn ln_series(
    a_zonal: f64,
    spectrum: Vec<f64>,
    ctl: &SeriesControl,
    mut radial: impl FnMut(usize) -> Result<SignedLog>,
) -> Result<f64> {
    let terms = log_degree_terms(a_zonal, &MatrixArgument::Spectrum(spectrum), ctl.max_degree)?;
    let s = sum_series(ctl, |t| {
        if terms[t].is_zero() {
            return Ok(SignedLog::ZERO);
        }
        Ok(terms[t].mul(radial(t)?))
    })?;
    positive_sum(s)
}

/// The explicit (generally non-symmetric) kernel argument `Ω Σ^{-1} A²`
/// with `Ω = Σ^{-1} μ μᵀ`, for either `A = R` or `A = W`.
pub fn noncentral_kernel(params: &ModelParams, a: &DMatrix<f64>) -> Result<MatrixArgument> {
    check_dims(params, a.nrows())?;
    MatrixArgument::matrix(params.prepare()?.kernel_matrix(a))
}

/// Log of the noncentral size-and-shape density
///
/// ```text
/// f(R) = c_V |Σ|^{−K/2} |R|^{K−n} Π(L_i + L_j) Σ_t h^{(2t)}(tr Σ^{-1}R² + tr Ω) S_t(Ω Σ^{-1} R²)
/// ```
pub fn ln_size_and_shape_density(
    r_mat: &DMatrix<f64>,
    params: &ModelParams,
    generator: &dyn Generator,
    ctl: &SeriesControl,
) -> Result<f64> {
    let n = r_mat.nrows();
    check_dims(params, n)?;
    let k = params.k();
    let prep = params.prepare()?;
    let ev = positive_eigenvalues(r_mat, "R")?;
    let y = prep.quad(r_mat) + prep.trace_omega;
    let pre = ln_stiefel_constant(n, k) - k as f64 / 2.0 * prep.ln_det_sigma
        + (k - n) as f64 * ev.iter().map(|v| v.ln()).sum::<f64>()
        + pair_sum_product(&ev).ln();
    let series = ln_series(k as f64 / 2.0, prep.kernel_spectrum(r_mat), ctl, |t| {
        generator.ln_derivative(y, 2 * t)
    })?;
    Ok(pre + series)
}

pub fn size_and_shape_density(
    r_mat: &DMatrix<f64>,
    params: &ModelParams,
    generator: &dyn Generator,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(ln_size_and_shape_density(r_mat, params, generator, ctl)?.exp())
}

/// Log of the central size-and-shape density
/// `c_V |Σ|^{−K/2} |R|^{K−n} Π(L_i + L_j) h(tr Σ^{-1} R²)`; the mean in
/// `params` is ignored.
pub fn ln_central_size_and_shape_density(
    r_mat: &DMatrix<f64>,
    params: &ModelParams,
    generator: &dyn Generator,
) -> Result<f64> {
    let n = r_mat.nrows();
    check_dims(params, n)?;
    let k = params.k();
    let prep = params.prepare()?;
    let ev = positive_eigenvalues(r_mat, "R")?;
    Ok(ln_stiefel_constant(n, k) - k as f64 / 2.0 * prep.ln_det_sigma
        + (k - n) as f64 * ev.iter().map(|v| v.ln()).sum::<f64>()
        + pair_sum_product(&ev).ln()
        + generator.ln_h(prep.quad(r_mat))?)
}

pub fn central_size_and_shape_density(
    r_mat: &DMatrix<f64>,
    params: &ModelParams,
    generator: &dyn Generator,
) -> Result<f64> {
    Ok(ln_central_size_and_shape_density(r_mat, params, generator)?.exp())
}

/// Radial integral `I_t = ∫₀^∞ r^{nK+2t−1} h^{(2t)}(q r² + ω) dr` by adaptive
/// quadrature, for an arbitrary generator.
pub fn ln_radial_integral_quadrature(
    t: usize,
    q: f64,
    omega: f64,
    generator: &dyn Generator,
) -> Result<SignedLog> {
    let a = generator.dims().reduced_dim() as f64 / 2.0;
    let k = 2 * t;
    // with s = r²: I_t = ½ ∫ s^{a+t−1} h^{(2t)}(q s + ω) ds
    let ln_g = |s: f64| -> Result<SignedLog> {
        Ok(generator.ln_derivative(q * s + omega, k)?.mul_ln((a + t as f64 - 1.0) * s.ln()))
    };
    let mut peak = (f64::NEG_INFINITY, 1.0);
    let centre = generator.scale_hint().max(a + t as f64) / q;
    for j in -40..=40 {
        let s = centre * 2f64.powf(j as f64 / 4.0);
        let v = ln_g(s)?;
        if !v.is_zero() && v.ln_abs > peak.0 {
            peak = (v.ln_abs, s);
        }
    }
    if peak.0 == f64::NEG_INFINITY {
        return Ok(SignedLog::ZERO);
    }
    let (ln_ref, scale) = peak;
    let spec = QuadratureSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_depth: 40,
    };
    let failure = std::cell::RefCell::new(None);
    let v = integrate_to_infinity(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            match ln_g(s) {
                Ok(g) => g.mul_ln(-ln_ref).to_f64(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e.to_string());
                    f64::NAN
                }
            }
        },
        0.0,
        scale,
        &spec,
    );
    let v = match (v, failure.into_inner()) {
        (Ok(v), None) => v,
        (_, Some(msg)) => {
            return Err(Error::Quadrature {
                message: format!("radial integrand failed: {msg}"),
                trace: vec![format!("t = {t}, q = {q}, ω = {omega}")],
            })
        }
        (Err(e), None) => return Err(e),
    };
    Ok(SignedLog::from_f64(0.5 * v).mul_ln(ln_ref))
}

/// Closed-form `I_t` for the Kotz type I generator with `T = 1` (Gaussian
/// kernel) and rate `R`:
/// `I_t = R^{a+2t} π^{−a} e^{−Rω} Γ(a+t) / (2 (Rq)^{a+t})`.
pub fn ln_radial_integral_gaussian(t: usize, q: f64, omega: f64, a: f64, rate: f64) -> f64 {
    let tf = t as f64;
    (a + 2.0 * tf) * rate.ln() - a * std::f64::consts::PI.ln() - rate * omega + ln_gamma(a + tf)
        - std::f64::consts::LN_2
        - (a + tf) * (rate * q).ln()
}

/// Closed-form `I_t` for the Kotz type I generator with integer `T ≥ 1`:
///
/// ```text
/// I_t = A R^{2t} e^{−Rω} Σ_{m=0}^{min(2t,T−1)} C(2t,m) (T−1)_m↓ (−R)^{−m}
///        Σ_{i=0}^{T−1−m} C(T−1−m,i) ω^{T−1−m−i} q^i Γ(a+t+i) / (2 (Rq)^{a+t+i})
/// ```
pub fn ln_radial_integral_kotz(t: usize, q: f64, omega: f64, spec: &GeneratorSpec) -> Result<SignedLog> {
    let tt = spec.integer_t().ok_or_else(|| {
        Error::Unsupported(format!("closed-form radial integral needs integer T, got {}", spec.t))
    })?;
    let a = spec.a();
    let rate = spec.r;
    let tf = t as f64;
    let ln_rq = (rate * q).ln();
    let mut acc = LogAccumulator::new();
    for m in 0..=(2 * t).min(tt - 1) {
        let coef = binomial(2 * t, m) * falling_factorial(spec.t - 1.0, m);
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        let outer = SignedLog::from_f64(sign * coef).mul_ln(-(m as f64) * rate.ln());
        let top = tt - 1 - m;
        for i in 0..=top {
            let e = top - i;
            let ln_omega_pow = if e == 0 {
                0.0
            } else if omega == 0.0 {
                continue;
            } else {
                e as f64 * omega.ln()
            };
            let fi = i as f64;
            let ln_inner = binomial(top, i).ln() + ln_omega_pow + fi * q.ln() + ln_gamma(a + tf + fi)
                - std::f64::consts::LN_2
                - (a + tf + fi) * ln_rq;
            acc.add(outer.mul_ln(ln_inner));
        }
    }
    Ok(acc
        .value()
        .mul_ln(spec.ln_constant() + 2.0 * tf * rate.ln() - rate * omega))
}

fn shape_setup(shape: &PolarShape, params: &ModelParams) -> Result<(Prepared, f64)> {
    check_dims(params, shape.n())?;
    let prep = params.prepare()?;
    let pre = ln_shape_prefactor(shape, &prep, params.k())?;
    Ok((prep, pre))
}

/// Log of the noncentral shape density for an arbitrary generator, with each
/// radial integral evaluated by adaptive quadrature:
///
/// ```text
/// f(u) = c_V c_w |Σ|^{−K/2} |W|^{K−n} Π(λ_i+λ_j) J(u) Σ_t S_t(Ω Σ^{-1} W²) I_t,
/// I_t = ∫₀^∞ r^{nK+2t−1} h^{(2t)}(r² tr Σ^{-1}W² + tr Ω) dr.
/// ```
pub fn ln_shape_density_general(
    shape: &PolarShape,
    params: &ModelParams,
    generator: &dyn Generator,
    ctl: &SeriesControl,
) -> Result<f64> {
    let (prep, pre) = shape_setup(shape, params)?;
    let q = prep.quad(&shape.w);
    let omega = prep.trace_omega;
    let series = ln_series(params.k() as f64 / 2.0, prep.kernel_spectrum(&shape.w), ctl, |t| {
        ln_radial_integral_quadrature(t, q, omega, generator)
    })?;
    Ok(pre + series)
}

pub fn shape_density_general(
    shape: &PolarShape,
    params: &ModelParams,
    generator: &dyn Generator,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(ln_shape_density_general(shape, params, generator, ctl)?.exp())
}

/// Log of the central shape density, which does not depend on the generator:
///
/// ```text
/// f(u) = 2^{n−1} c_w Γ(nK/2) / (Γ_n(K/2) |Σ|^{K/2}) · |W|^{K−n} Π(λ_i+λ_j) J(u) (tr Σ^{-1}W²)^{−nK/2}
/// ```
pub fn ln_central_shape_density(shape: &PolarShape, params: &ModelParams) -> Result<f64> {
    check_dims(params, shape.n())?;
    let n = shape.n();
    let k = params.k();
    let a = (n * k) as f64 / 2.0;
    let prep = params.prepare()?;
    let lam = positive_eigenvalues(&shape.w, "W")?;
    Ok((n as f64 - 1.0) * std::f64::consts::LN_2 + ln_angle_constant(n) + ln_gamma(a)
        - ln_multivariate_gamma(n, k as f64 / 2.0)
        - k as f64 / 2.0 * prep.ln_det_sigma
        + (k - n) as f64 * lam.iter().map(|v| v.ln()).sum::<f64>()
        + pair_sum_product(&lam).ln()
        + jacobian_j(&shape.u).ln()
        - a * prep.quad(&shape.w).ln())
}

pub fn central_shape_density(shape: &PolarShape, params: &ModelParams) -> Result<f64> {
    Ok(ln_central_shape_density(shape, params)?.exp())
}

/// Log of the Gaussian shape density (generator `h(y) = (2π)^{−nK/2} e^{−y/2}`),
/// with closed-form radial integrals.
pub fn ln_gaussian_shape_density(shape: &PolarShape, params: &ModelParams, ctl: &SeriesControl) -> Result<f64> {
    let (prep, pre) = shape_setup(shape, params)?;
    let q = prep.quad(&shape.w);
    let omega = prep.trace_omega;
    let a = (params.n() * params.k()) as f64 / 2.0;
    let series = ln_series(params.k() as f64 / 2.0, prep.kernel_spectrum(&shape.w), ctl, |t| {
        Ok(SignedLog::positive(ln_radial_integral_gaussian(t, q, omega, a, 0.5)))
    })?;
    Ok(pre + series)
}

pub fn gaussian_shape_density(shape: &PolarShape, params: &ModelParams, ctl: &SeriesControl) -> Result<f64> {
    Ok(ln_gaussian_shape_density(shape, params, ctl)?.exp())
}

/// Log of the Kotz type I shape density. Integer `T` uses the terminating
/// closed form of the radial integrals; other `T` falls back to quadrature.
pub fn ln_kotz_shape_density(
    shape: &PolarShape,
    params: &ModelParams,
    spec: &GeneratorSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    spec.validate()?;
    if spec.integer_t().is_none() {
        return ln_shape_density_general(shape, params, spec, ctl);
    }
    let (prep, pre) = shape_setup(shape, params)?;
    let q = prep.quad(&shape.w);
    let omega = prep.trace_omega;
    let series = ln_series(params.k() as f64 / 2.0, prep.kernel_spectrum(&shape.w), ctl, |t| {
        ln_radial_integral_kotz(t, q, omega, spec)
    })?;
    Ok(pre + series)
}

pub fn kotz_shape_density(
    shape: &PolarShape,
    params: &ModelParams,
    spec: &GeneratorSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(ln_kotz_shape_density(shape, params, spec, ctl)?.exp())
}

/// Log shape density for a Gaussian or Kotz specification, choosing the
/// closed form where one exists.
pub fn ln_shape_density(
    shape: &PolarShape,
    params: &ModelParams,
    spec: &GeneratorSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    match spec.family {
        super::Family::Gaussian => ln_gaussian_shape_density(shape, params, ctl),
        super::Family::KotzTypeI => ln_kotz_shape_density(shape, params, spec, ctl),
    }
}
