//! Model parameters in the whitened convention and the noncentrality matrix.
//!
//! Densities are parameterized after whitening: `Θ = I`, the mean is
//! `μ = L μ_X Θ^{-1/2}` (of size `n × K`) and `Σ = L Σ_X Lᵀ`. The
//! noncentrality is `Ω = Σ^{-1/2} μ μᵀ Σ^{-1/2}`, which has the same trace
//! and the same nonzero spectrum as `Σ^{-1} μ μᵀ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{helmert_submatrix, sorted_eigenvalues, spd_power, Dims};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Covariance {
    /// `Σ = σ² I`, storing the variance `σ²`.
    Isotropic(f64),
    Full(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: DMatrix<f64>,
    pub sigma: Covariance,
    /// Column covariance the data were whitened with; `None` means identity.
    pub theta: Option<DMatrix<f64>>,
}

impl ModelParams {
    pub fn isotropic(mu: DMatrix<f64>, sigma2: f64) -> Result<Self> {
        let p = ModelParams {
            mu,
            sigma: Covariance::Isotropic(sigma2),
            theta: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn full(mu: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let p = ModelParams {
            mu,
            sigma: Covariance::Full(sigma),
            theta: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Converts a landmark-level model `X ~ E(μ_X, Σ_X, Θ, h)` into the
    /// whitened reduced parameters.
    pub fn from_landmark_model(
        mu_x: &DMatrix<f64>,
        sigma_x: &DMatrix<f64>,
        theta: &DMatrix<f64>,
    ) -> Result<Self> {
        let (n_land, k) = mu_x.shape();
        Dims::new(n_land, k)?;
        if sigma_x.shape() != (n_land, n_land) || theta.shape() != (k, k) {
            return Err(Error::invalid("Σ_X must be N×N and Θ must be K×K"));
        }
        let l = helmert_submatrix(n_land)?;
        let mu = &l * mu_x * spd_power(theta, -0.5, "Θ")?;
        let sigma = &l * sigma_x * l.transpose();
        let p = ModelParams {
            mu,
            sigma: Covariance::Full((&sigma + sigma.transpose()) * 0.5),
            theta: Some(theta.clone()),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.mu.nrows()
    }

    pub fn k(&self) -> usize {
        self.mu.ncols()
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.n() + 1, self.k())
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        if self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mean has non-finite entries"));
        }
        match &self.sigma {
            Covariance::Isotropic(s2) => {
                if !(*s2 > 0.0) || !s2.is_finite() {
                    return Err(Error::invalid(format!("σ² must be positive, got {s2}")));
                }
            }
            Covariance::Full(s) => {
                if s.shape() != (self.n(), self.n()) {
                    return Err(Error::invalid(format!(
                        "Σ must be {n}×{n}",
                        n = self.n()
                    )));
                }
                spd_power(s, 1.0, "Σ")?;
            }
        }
        if let Some(t) = &self.theta {
            spd_power(t, 1.0, "Θ")?;
        }
        Ok(())
    }

    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        match &self.sigma {
            Covariance::Isotropic(s2) => DMatrix::identity(self.n(), self.n()) * *s2,
            Covariance::Full(s) => s.clone(),
        }
    }

    pub(crate) fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let (sigma_inv, ln_det) = match &self.sigma {
            Covariance::Isotropic(s2) => (
                DMatrix::identity(self.n(), self.n()) / *s2,
                self.n() as f64 * s2.ln(),
            ),
            Covariance::Full(s) => {
                let ln_det = sorted_eigenvalues(s).iter().map(|v| v.ln()).sum();
                (spd_power(s, -1.0, "Σ")?, ln_det)
            }
        };
        let sigma_inv_mu = &sigma_inv * &self.mu;
        let trace_omega = (self.mu.transpose() * &sigma_inv_mu).trace();
        Ok(Prepared {
            sigma_inv,
            ln_det_sigma: ln_det,
            sigma_inv_mu,
            trace_omega,
        })
    }
}

/// Quantities shared by every density evaluation at fixed parameters.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub sigma_inv: DMatrix<f64>,
    pub ln_det_sigma: f64,
    pub sigma_inv_mu: DMatrix<f64>,
    pub trace_omega: f64,
}

impl Prepared {
    /// `tr(Σ^{-1} A²)`.
    pub fn quad(&self, a: &DMatrix<f64>) -> f64 {
        (&self.sigma_inv * a * a).trace()
    }

    /// Spectrum of `Ω Σ^{-1} A²`, computed from the similar symmetric matrix
    /// `A Σ^{-1} μ μᵀ Σ^{-1} A`.
    pub fn kernel_spectrum(&self, a: &DMatrix<f64>) -> Vec<f64> {
        let b = a * &self.sigma_inv_mu;
        sorted_eigenvalues(&(&b * b.transpose()))
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }

    /// The explicit, generally non-symmetric `Σ^{-1} μ μᵀ Σ^{-1} A²`.
    pub fn kernel_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sigma_inv_mu * self.sigma_inv_mu.transpose() * a * a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Noncentrality {
    pub omega: DMatrix<f64>,
}

impl Noncentrality {
    pub fn trace(&self) -> f64 {
        self.omega.trace()
    }
}

/// `Ω = Σ^{-1/2} μ μᵀ Σ^{-1/2}`.
pub fn noncentrality(params: &ModelParams) -> Result<Noncentrality> {
    params.validate()?;
    let s = spd_power(&params.sigma_matrix(), -0.5, "Σ")?;
    let m = &s * &params.mu;
    let omega = &m * m.transpose();
    Ok(Noncentrality {
        omega: (&omega + omega.transpose()) * 0.5,
    })
}
