//! Likelihood fitting of the isotropic shape models, modified BIC model
//! selection and the likelihood-ratio test of equal mean shape.
//!
//! The isotropic shape densities depend on `(μ, σ²)` only through
//! `μ μᵀ / σ²`: shapes carry no information about scale, nor about a right
//! rotation of the mean. The shape likelihood is therefore maximized over
//! `ν = μ/σ` in the canonical form `[L 0]` (`L` lower triangular with
//! nonnegative diagonal), and `σ²` is estimated afterwards from the sizes
//! through the size-and-shape density at the fitted `ν`.

mod fit;
mod lrt;
pub mod optim;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{shape_from_landmarks, Dims, LandmarkMatrix, PolarShape};
use crate::models::{ln_isotropic_shape_density, IsotropicVariant};
use crate::zonal::SeriesControl;

pub use crate::special::chi2_sf;
pub use fit::{canonical_mean, fit_mle, fit_shape_only, FitOptions, FitResult};
pub use lrt::{lrt_equal_mean, lrt_equal_mean_with, H0Sigma, LrtResult};

/// Shapes (with sizes) of one group of specimens.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub specimens: Vec<PolarShape>,
    pub dims: Dims,
    /// Indices of rank-deficient configurations.
    pub degenerate: Vec<usize>,
}

impl Dataset {
    pub fn new(specimens: Vec<PolarShape>, dims: Dims) -> Result<Self> {
        if specimens.is_empty() {
            return Err(Error::invalid("a dataset needs at least one specimen"));
        }
        if let Some(i) = specimens.iter().position(|s| s.n() != dims.n()) {
            return Err(Error::invalid(format!(
                "specimen {i} has shape order {} but the dataset has N = {}",
                specimens[i].n(),
                dims.landmarks
            )));
        }
        Ok(Dataset {
            specimens,
            dims,
            degenerate: Vec::new(),
        })
    }

    /// Runs every configuration through whitening, centering and the polar
    /// decomposition.
    pub fn from_landmarks(configs: &[LandmarkMatrix], theta: Option<&DMatrix<f64>>) -> Result<Self> {
        let first = configs
            .first()
            .ok_or_else(|| Error::invalid("a dataset needs at least one specimen"))?;
        let dims = first.dims();
        let mut specimens = Vec::with_capacity(configs.len());
        let mut degenerate = Vec::new();
        for (i, x) in configs.iter().enumerate() {
            if x.dims() != dims {
                return Err(Error::Data(format!(
                    "specimen {i} is {}×{} but the first is {}×{}",
                    x.dims().landmarks,
                    x.dims().coords,
                    dims.landmarks,
                    dims.coords
                )));
            }
            let (shape, degen) = shape_from_landmarks(x, theta).map_err(|e| Error::Specimen {
                index: i,
                source: Box::new(e),
            })?;
            if degen {
                degenerate.push(i);
            }
            specimens.push(shape);
        }
        Ok(Dataset {
            specimens,
            dims,
            degenerate,
        })
    }

    pub fn len(&self) -> usize {
        self.specimens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specimens.is_empty()
    }
}

/// `Σ_i ln f(u_i; μ, σ²)`, evaluated in parallel and summed in specimen order.
pub fn log_likelihood(
    data: &Dataset,
    variant: IsotropicVariant,
    mu: &DMatrix<f64>,
    sigma2: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    let terms: Vec<Result<f64>> = data
        .specimens
        .par_iter()
        .map(|s| ln_isotropic_shape_density(s, mu, sigma2, variant, ctl))
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

/// `BIC* = −2 ℓ + n_p (ln(n + 2) − ln 24)`.
pub fn bic_star(loglik: f64, n_p: usize, n: usize) -> f64 {
    -2.0 * loglik + n_p as f64 * ((n as f64 + 2.0).ln() - 24f64.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceGrade {
    Weak,
    Positive,
    Strong,
    VeryStrong,
}

impl std::fmt::Display for EvidenceGrade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvidenceGrade::Weak => "weak",
            EvidenceGrade::Positive => "positive",
            EvidenceGrade::Strong => "strong",
            EvidenceGrade::VeryStrong => "very strong",
        })
    }
}

/// Grade of a BIC* difference: `[0, 2)` weak, `[2, 6)` positive, `[6, 10]`
/// strong, above 10 very strong. The sign of `delta` is ignored.
pub fn evidence_grade(delta: f64) -> EvidenceGrade {
    let d = delta.abs();
    if d < 2.0 {
        EvidenceGrade::Weak
    } else if d < 6.0 {
        EvidenceGrade::Positive
    } else if d <= 10.0 {
        EvidenceGrade::Strong
    } else {
        EvidenceGrade::VeryStrong
    }
}
