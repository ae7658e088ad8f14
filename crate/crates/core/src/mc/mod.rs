//! Sampling from the matrix-variate models and numerical checks of the
//! analytic densities against quadrature and simulation.

pub mod sampler;
pub mod validate;

pub use sampler::{sample_landmarks, sample_reduced, specimen_rng, SamplerConfig};
pub use validate::{
    cell_probabilities, empirical_vs_analytic, importance_integral, kolmogorov_sf, ks_test,
    normalization_check, pd_theta2_interval, two_sample_chi2, Binning, GofReport, KsReport,
    McEstimate, ShapeDensity,
};
