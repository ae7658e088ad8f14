//! Generators, parameters and every density of the polar model.
//!
//! # Conventions
//!
//! With `n = N − 1`, `a = nK/2` and `b = K/2`:
//!
//! * The size-and-shape density is taken with respect to Lebesgue measure on
//!   the `n(n+1)/2` distinct entries of `R`. The change of variables
//!   `Y = R H` carries the factor `|R|^{K−n} Π_{i<j}(L_i + L_j)` times the
//!   invariant measure on the Stiefel manifold, whose total mass is
//!   `c_V = 2^n π^a / Γ_n(b)`. The `|R|^{K−n}` factor is 1 when `K = n`.
//! * The shape density is taken with respect to `du`, the Lebesgue measure on
//!   the angles. The weighted half-vectorization of `R` has norm `r`, and its
//!   relation to Lebesgue measure on the entries of `R` contributes
//!   `c_w = 2^{−n(n−1)/4}`, so `(dR) = c_w r^m J(u) dr du`.
//! * Isotropic models use `Σ = σ² I` with `σ²` the variance.
//!
//! All densities are evaluated in log space; the `ln_*` functions are the
//! primary entry points.

pub mod density;
pub mod generator;
pub mod isotropic;
pub mod params;

pub use density::*;
pub use generator::{kotz_h, kotz_h_derivative, Family, Generator, GeneratorSpec};
pub use isotropic::{isotropic_shape_density, ln_isotropic_shape_density, IsotropicVariant};
pub use params::{noncentrality, Covariance, ModelParams, Noncentrality};

use crate::special::ln_multivariate_gamma;

/// `ln c_V = n ln 2 + (nK/2) ln π − ln Γ_n(K/2)`.
pub fn ln_stiefel_constant(n: usize, k: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 + (n * k) as f64 / 2.0 * std::f64::consts::PI.ln()
        - ln_multivariate_gamma(n, k as f64 / 2.0)
}

/// `ln c_w = −n(n−1)/4 · ln 2`.
pub fn ln_angle_constant(n: usize) -> f64 {
    -((n * (n - 1)) as f64) / 4.0 * std::f64::consts::LN_2
}
