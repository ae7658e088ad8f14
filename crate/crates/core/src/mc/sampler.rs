//! Exact sampling through the elliptical stochastic representation.
//!
//! In reduced coordinates the model is `Y = μ + ρ Σ^{1/2} U` with `U`
//! uniform on the unit sphere of the `nK`-dimensional space of `n × K`
//! matrices. Since `Σ^{-1/2}(Y − μ)` has density `h(‖v‖²)`, the radius has
//! density proportional to `ρ^{nK−1} h(ρ²)`; for the Kotz type I generator
//! this makes `ρ²` Gamma distributed with shape `T − 1 + nK/2` and rate `R`,
//! which for the Gaussian is `χ²_{nK}`. Landmarks are then
//! `X = Lᵀ Y Θ^{1/2}`, so that `L X Θ^{-1/2} = Y`.
//!
//! Each specimen `i` draws from its own ChaCha8 stream (`seed`, stream `i`),
//! so output is identical for a given seed regardless of thread count.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{helmert_submatrix, spd_power, LandmarkMatrix};
use crate::models::{GeneratorSpec, ModelParams};

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub spec: GeneratorSpec,
    pub params: ModelParams,
    pub n: usize,
    pub seed: u64,
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.params.validate()?;
        if self.params.dims()? != self.spec.dims {
            return Err(Error::invalid(format!(
                "generator dims {:?} do not match parameter dims {:?}",
                self.spec.dims,
                self.params.dims()?
            )));
        }
        Ok(())
    }
}

/// Per-specimen generator: stream `index` of the seeded ChaCha8 sequence.
pub fn specimen_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `Y = μ + ρ Σ^{1/2} U` in reduced coordinates.
pub fn sample_reduced(cfg: &SamplerConfig) -> Result<Vec<DMatrix<f64>>> {
    cfg.validate()?;
    let (n, k) = (cfg.params.n(), cfg.params.k());
    let shape = cfg.spec.t - 1.0 + (n * k) as f64 / 2.0;
    let radial = Gamma::new(shape, 1.0 / cfg.spec.r)
        .map_err(|e| Error::invalid(format!("radial law: {e}")))?;
    let root = spd_power(&cfg.params.sigma_matrix(), 0.5, "Σ")?;
    let mu = &cfg.params.mu;
    Ok((0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = specimen_rng(cfg.seed, i);
            let mut u = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
            let norm = u.norm();
            u /= norm;
            let rho = radial.sample(&mut rng).sqrt();
            mu + &root * u * rho
        })
        .collect())
}

/// Draws landmark configurations `X = Lᵀ Y Θ^{1/2}` (centroid at the origin).
pub fn sample_landmarks(cfg: &SamplerConfig) -> Result<Vec<LandmarkMatrix>> {
    let ys = sample_reduced(cfg)?;
    let l = helmert_submatrix(cfg.params.n() + 1)?;
    let right = match &cfg.params.theta {
        Some(t) => spd_power(t, 0.5, "Θ")?,
        None => DMatrix::identity(cfg.params.k(), cfg.params.k()),
    };
    ys.into_iter()
        .map(|y| LandmarkMatrix::new(l.transpose() * y * &right))
        .collect()
}
