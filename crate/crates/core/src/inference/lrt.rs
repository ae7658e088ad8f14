//! Likelihood-ratio test of equal mean shape between two groups.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{canonical_mean, minimize_with_restarts, nu_from_params, params_from_nu};
use super::{chi2_sf, fit_shape_only, log_likelihood, Dataset, FitOptions};
use crate::error::{Error, Result};
use crate::models::IsotropicVariant;
use crate::zonal::SeriesControl;

/// Scale assumption under the null hypothesis `μ₁ = μ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H0Sigma {
    /// `σ₁² = σ₂²`: both groups share `ν = μ/σ`.
    Pooled,
    /// Separate `σ₁², σ₂²`: `ν₂ = c ν₁` with `c = σ₁/σ₂ > 0`.
    #[default]
    PerGroup,
}

impl fmt::Display for H0Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            H0Sigma::Pooled => "pooled",
            H0Sigma::PerGroup => "per-group",
        })
    }
}

impl FromStr for H0Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(H0Sigma::Pooled),
            "per-group" => Ok(H0Sigma::PerGroup),
            other => Err(Error::invalid(format!(
                "unknown H0 sigma mode '{other}' (expected pooled or per-group)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    /// `−2 (ℓ_H0 − ℓ_Ha)`, clamped at 0.
    pub stat: f64,
    /// Nominal degrees of freedom `(N−1)K`.
    pub df: usize,
    pub p_value: f64,
    /// Number of free parameters the shapes actually identify under `Ha`
    /// minus those under `H0`.
    pub df_identifiable: usize,
    pub p_value_identifiable: f64,
    pub loglik_h0: f64,
    pub loglik_ha: f64,
    pub h0_sigma: H0Sigma,
    pub variants: [IsotropicVariant; 2],
}

/// Test of `H0: μ₁ = μ₂` with the same model in both groups and per-group
/// scales under `H0`.
pub fn lrt_equal_mean(
    data1: &Dataset,
    data2: &Dataset,
    variant: IsotropicVariant,
    ctl: &SeriesControl,
) -> Result<LrtResult> {
    lrt_equal_mean_with(
        data1,
        data2,
        [variant, variant],
        H0Sigma::default(),
        ctl,
        &FitOptions::default(),
    )
}

pub fn lrt_equal_mean_with(
    data1: &Dataset,
    data2: &Dataset,
    variants: [IsotropicVariant; 2],
    h0_sigma: H0Sigma,
    ctl: &SeriesControl,
    opts: &FitOptions,
) -> Result<LrtResult> {
    if data1.dims != data2.dims {
        return Err(Error::Data(format!(
            "groups differ in dimensions: ({}, {}) vs ({}, {})",
            data1.dims.landmarks, data1.dims.coords, data2.dims.landmarks, data2.dims.coords
        )));
    }
    let (n, k) = (data1.dims.n(), data1.dims.coords);
    let p = n * (n + 1) / 2;

    let (nu1, l1, _, _) = fit_shape_only(data1, variants[0], None, ctl, opts)?;
    let (nu2, l2, _, _) = fit_shape_only(data2, variants[1], None, ctl, opts)?;
    let loglik_ha = l1 + l2;

    let joint = |nu_a: &DMatrix<f64>, nu_b: &DMatrix<f64>| -> f64 {
        let a = log_likelihood(data1, variants[0], nu_a, 1.0, ctl);
        let b = log_likelihood(data2, variants[1], nu_b, 1.0, ctl);
        match (a, b) {
            (Ok(a), Ok(b)) => -(a + b),
            _ => f64::INFINITY,
        }
    };

    let (loglik_h0, df_identifiable) = match h0_sigma {
        H0Sigma::Pooled => {
            let start = canonical_mean(&((&nu1 + &nu2) * 0.5));
            let objective = |x: &[f64]| {
                let nu = nu_from_params(x, n, k);
                joint(&nu, &nu)
            };
            let m = minimize_with_restarts(objective, &params_from_nu(&start), opts);
            (-m.f, p)
        }
        H0Sigma::PerGroup => {
            let c0 = (nu2.norm() / nu1.norm()).max(1e-6);
            let start = canonical_mean(&((&nu1 + &nu2 / c0) * 0.5));
            let mut x0 = params_from_nu(&start);
            x0.push(c0.ln());
            let objective = |x: &[f64]| {
                let nu = nu_from_params(&x[..p], n, k);
                let c = x[p].exp();
                joint(&nu, &(&nu * c))
            };
            let m = minimize_with_restarts(objective, &x0, opts);
            (-m.f, p - 1)
        }
    };
    if !loglik_h0.is_finite() {
        return Err(Error::Data("the null-hypothesis likelihood is not finite".into()));
    }

    let stat = (-2.0 * (loglik_h0 - loglik_ha)).max(0.0);
    let df = n * k;
    Ok(LrtResult {
        stat,
        df,
        p_value: chi2_sf(stat, df),
        df_identifiable,
        p_value_identifiable: chi2_sf(stat, df_identifiable),
        loglik_h0,
        loglik_ha,
        h0_sigma,
        variants,
    })
}
