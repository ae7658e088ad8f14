//! Isotropic shape densities (`Σ = σ² I`, `Θ = I`) for the Gaussian model and
//! the Kotz type I models with `T = 2, 3` and `R = 1/2`.
//!
//! With `a = nK/2`, `b = K/2`, `τ = tr(μᵀμ) / (2σ²)` and `Z` the spectrum of
//! `W μ μᵀ W / (2σ²)`, each density is
//!
//! ```text
//! f(u) = κ_v · 2^{n−1} c_w / Γ_n(b) · |W|^{K−n} Π(λ_i+λ_j) J(u) e^{−τ} Σ_t B_v(t) S_t(Z)
//! ```
//!
//! where `S_t(Z) = Σ_{κ⊢t} C_κ(Z) / ((b)_κ t!)` and
//!
//! | variant  | `κ_v`          | `B_v(t)`                                                            |
//! |----------|----------------|---------------------------------------------------------------------|
//! | Gaussian | 1              | `Γ(a+t)`                                                             |
//! | Kotz T=2 | `1/a`          | `(τ − 2t) Γ(a+t) + Γ(a+t+1)`                                         |
//! | Kotz T=3 | `1/(a(a+1))`   | `(τ² − 4tτ + 4t² − 2t) Γ(a+t) + (2τ − 4t) Γ(a+t+1) + Γ(a+t+2)`        |
//!
//! The scale σ enters only through `μ/σ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ln_angle_constant;
use crate::error::{Error, Result};
use crate::geometry::{jacobian_j, pair_sum_product, sorted_eigenvalues, PolarShape};
use crate::special::{ln_gamma, ln_multivariate_gamma, SignedLog};
use crate::zonal::{log_degree_terms, sum_series, MatrixArgument, SeriesControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsotropicVariant {
    Gaussian,
    KotzT2,
    KotzT3,
}

impl IsotropicVariant {
    pub const ALL: [IsotropicVariant; 3] = [
        IsotropicVariant::Gaussian,
        IsotropicVariant::KotzT2,
        IsotropicVariant::KotzT3,
    ];

    /// Generator parameter `T`.
    pub fn t(&self) -> usize {
        match self {
            IsotropicVariant::Gaussian => 1,
            IsotropicVariant::KotzT2 => 2,
            IsotropicVariant::KotzT3 => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IsotropicVariant::Gaussian => "gaussian",
            IsotropicVariant::KotzT2 => "kotz-t2",
            IsotropicVariant::KotzT3 => "kotz-t3",
        }
    }
}

impl std::fmt::Display for IsotropicVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for IsotropicVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(IsotropicVariant::Gaussian),
            "kotz-t2" => Ok(IsotropicVariant::KotzT2),
            "kotz-t3" => Ok(IsotropicVariant::KotzT3),
            _ => Err(Error::invalid(format!(
                "unknown model '{s}' (expected gaussian, kotz-t2 or kotz-t3)"
            ))),
        }
    }
}

fn bracket(variant: IsotropicVariant, t: usize, a: f64, tau: f64) -> SignedLog {
    let tf = t as f64;
    let g0 = ln_gamma(a + tf);
    match variant {
        IsotropicVariant::Gaussian => SignedLog::positive(g0),
        // Γ(a+t+1) = (a+t) Γ(a+t)
        IsotropicVariant::KotzT2 => SignedLog::from_f64(tau - 2.0 * tf + (a + tf)).mul_ln(g0),
        IsotropicVariant::KotzT3 => {
            let c0 = tau * tau - 4.0 * tf * tau + 4.0 * tf * tf - 2.0 * tf;
            let c1 = (2.0 * tau - 4.0 * tf) * (a + tf);
            let c2 = (a + tf) * (a + tf + 1.0);
            SignedLog::from_f64(c0 + c1 + c2).mul_ln(g0)
        }
    }
}

/// Log of the isotropic shape density at mean `μ` (`n × K`) and variance `σ²`.
pub fn ln_isotropic_shape_density(
    shape: &PolarShape,
    mu: &DMatrix<f64>,
    sigma2: f64,
    variant: IsotropicVariant,
    ctl: &SeriesControl,
) -> Result<f64> {
    let n = shape.n();
    if mu.nrows() != n || mu.ncols() < n {
        return Err(Error::invalid(format!(
            "mean must be {n}×K with K ≥ {n}, got {}×{}",
            mu.nrows(),
            mu.ncols()
        )));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("σ² must be positive, got {sigma2}")));
    }
    let k = mu.ncols();
    let a = (n * k) as f64 / 2.0;
    let b = k as f64 / 2.0;
    let lam = sorted_eigenvalues(&shape.w);
    if let Some((i, v)) = lam.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            what: "W".into(),
            index: i,
            eigenvalue: *v,
        });
    }
    let tau = mu.norm_squared() / (2.0 * sigma2);
    let wm = &shape.w * mu;
    let z: Vec<f64> = sorted_eigenvalues(&(&wm * wm.transpose()))
        .into_iter()
        .map(|v| v.max(0.0) / (2.0 * sigma2))
        .collect();
    let terms = log_degree_terms(b, &MatrixArgument::Spectrum(z), ctl.max_degree)?;
    let sum = sum_series(ctl, |t| {
        if terms[t].is_zero() {
            return Ok(SignedLog::ZERO);
        }
        Ok(terms[t].mul(bracket(variant, t, a, tau)))
    })?;
    if !(sum.sign > 0.0) {
        return Err(Error::NonPositiveSeries { sign: sum.sign });
    }
    let ln_kappa = match variant {
        IsotropicVariant::Gaussian => 0.0,
        IsotropicVariant::KotzT2 => -a.ln(),
        IsotropicVariant::KotzT3 => -(a * (a + 1.0)).ln(),
    };
    Ok(ln_kappa + (n as f64 - 1.0) * std::f64::consts::LN_2 + ln_angle_constant(n)
        - ln_multivariate_gamma(n, b)
        + (k - n) as f64 * lam.iter().map(|v| v.ln()).sum::<f64>()
        + pair_sum_product(&lam).ln()
        + jacobian_j(&shape.u).ln()
        - tau
        + sum.ln_abs)
}

pub fn isotropic_shape_density(
    shape: &PolarShape,
    mu: &DMatrix<f64>,
    sigma2: f64,
    variant: IsotropicVariant,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(ln_isotropic_shape_density(shape, mu, sigma2, variant, ctl)?.exp())
}
