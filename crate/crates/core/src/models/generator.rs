//! Elliptical generators `h` and their derivatives.
//!
//! A generator for the reduced configuration `Y` (`nK` real entries, with
//! `n = N − 1`) satisfies `∫₀^∞ s^{nK−1} h(s²) ds = Γ(nK/2) / (2 π^{nK/2})`.
//! The Kotz type I generator (with `s = 1`) is
//!
//! ```text
//! h(y) = A y^{T−1} e^{−R y},   A = R^{T−1+a} Γ(a) / (π^a Γ(T−1+a)),   a = nK/2,
//! ```
//!
//! and the Gaussian is the case `T = 1`, `R = 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dims;
use crate::special::{binomial, falling_factorial, ln_gamma, LogAccumulator, SignedLog};

/// Scalar function defining an elliptical family, together with its
/// derivatives. Used by the quadrature route of the general shape density.
pub trait Generator: Send + Sync {
    fn dims(&self) -> Dims;

    /// `ln h(y)`.
    fn ln_h(&self, y: f64) -> Result<f64>;

    /// `h^{(k)}(y)` in sign/log form.
    fn ln_derivative(&self, y: f64, k: usize) -> Result<SignedLog>;

    /// Typical magnitude of `y = tr(Σ^{-1}(Y−μ)(Y−μ)ᵀ)`, used to scale radial
    /// quadrature.
    fn scale_hint(&self) -> f64 {
        self.dims().reduced_dim() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    KotzTypeI,
}

/// Gaussian or Kotz type I generator for given `(N, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub t: f64,
    pub r: f64,
    pub dims: Dims,
}

impl GeneratorSpec {
    pub fn gaussian(dims: Dims) -> Self {
        GeneratorSpec {
            family: Family::Gaussian,
            t: 1.0,
            r: 0.5,
            dims,
        }
    }

    pub fn kotz(t: f64, r: f64, dims: Dims) -> Result<Self> {
        let spec = GeneratorSpec {
            family: Family::KotzTypeI,
            t,
            r,
            dims,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.a();
        if !(self.r > 0.0) || !self.r.is_finite() || !self.t.is_finite() || !(self.t - 1.0 + a > 0.0) {
            return Err(Error::invalid(format!(
                "Kotz generator needs R > 0 and T > 1 − nK/2, got T = {}, R = {}",
                self.t, self.r
            )));
        }
        if self.family == Family::Gaussian && (self.t != 1.0 || self.r != 0.5) {
            return Err(Error::invalid("the Gaussian generator has T = 1 and R = 1/2"));
        }
        Ok(())
    }

    /// `a = nK/2`.
    pub fn a(&self) -> f64 {
        self.dims.reduced_dim() as f64 / 2.0
    }

    /// `T` as an integer when it is one.
    pub fn integer_t(&self) -> Option<usize> {
        (self.t >= 1.0 && self.t.fract() == 0.0).then_some(self.t as usize)
    }

    /// `ln A`, the log normalizing constant.
    pub fn ln_constant(&self) -> f64 {
        let a = self.a();
        (self.t - 1.0 + a) * self.r.ln() + ln_gamma(a)
            - a * std::f64::consts::PI.ln()
            - ln_gamma(self.t - 1.0 + a)
    }
}

/// `h(y)` of the Kotz type I (or Gaussian) generator.
pub fn kotz_h(y: f64, spec: &GeneratorSpec) -> Result<f64> {
    Ok(spec.ln_h(y)?.exp())
}

/// `h^{(k)}(y) = A (−R)^k e^{−Ry} Σ_{m=0}^{k} C(k,m) (T−1)(T−2)⋯(T−m) (−R)^{−m} y^{T−1−m}`.
pub fn kotz_h_derivative(y: f64, k: usize, spec: &GeneratorSpec) -> Result<f64> {
    Ok(spec.ln_derivative(y, k)?.to_f64())
}

impl Generator for GeneratorSpec {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn ln_h(&self, y: f64) -> Result<f64> {
        self.validate()?;
        if !(y >= 0.0) {
            return Err(Error::invalid(format!("generator argument must be ≥ 0, got {y}")));
        }
        let tm1 = self.t - 1.0;
        let ln_pow = if tm1 == 0.0 {
            0.0
        } else if y == 0.0 {
            if tm1 < 0.0 {
                return Err(Error::invalid(format!(
                    "h(0) diverges for T = {} < 1",
                    self.t
                )));
            }
            f64::NEG_INFINITY
        } else {
            tm1 * y.ln()
        };
        Ok(self.ln_constant() + ln_pow - self.r * y)
    }

    fn ln_derivative(&self, y: f64, k: usize) -> Result<SignedLog> {
        self.validate()?;
        if !(y > 0.0) {
            return Err(Error::invalid(format!(
                "generator derivatives need y > 0, got {y}"
            )));
        }
        let tm1 = self.t - 1.0;
        let ln_r = self.r.ln();
        let ln_y = y.ln();
        let mut acc = LogAccumulator::new();
        for m in 0..=k {
            let ff = falling_factorial(tm1, m);
            if ff == 0.0 {
                break;
            }
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            let term = SignedLog::from_f64(sign * binomial(k, m) * ff)
                .mul_ln(-(m as f64) * ln_r + (tm1 - m as f64) * ln_y);
            acc.add(term);
        }
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let lead = SignedLog {
            sign,
            ln_abs: self.ln_constant() + k as f64 * ln_r - self.r * y,
        };
        Ok(acc.value().mul(lead))
    }

    fn scale_hint(&self) -> f64 {
        ((self.t - 1.0 + self.a()) / self.r).max(1e-3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims::new(3, 2).unwrap()
    }

    #[test]
    fn gaussian_at_zero() {
        let g = GeneratorSpec::gaussian(dims());
        let expect = std::f64::consts::PI.powf(-2.0) * 0.5f64.powi(2);
        assert!((kotz_h(0.0, &g).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn t2_peaks_at_inverse_rate() {
        let g = GeneratorSpec::kotz(2.0, 0.7, dims()).unwrap();
        let peak = kotz_h(1.0 / 0.7, &g).unwrap();
        for y in [1.0 / 0.7 - 0.01, 1.0 / 0.7 + 0.01] {
            assert!(kotz_h(y, &g).unwrap() < peak);
        }
        assert!(kotz_h_derivative(1.0 / 0.7, 1, &g).unwrap().abs() < 1e-15);
    }

    #[test]
    fn t2_first_derivative() {
        let g = GeneratorSpec::kotz(2.0, 0.5, dims()).unwrap();
        let y = 1.3;
        let a = g.ln_constant().exp();
        let expect = a * (1.0 - 0.5 * y) * (-0.5 * y).exp();
        assert!((kotz_h_derivative(y, 1, &g).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn t1_bracket_collapses() {
        let g = GeneratorSpec::gaussian(dims());
        let a = g.ln_constant().exp();
        for k in 0..6 {
            let expect = a * (-0.5f64).powi(k as i32) * (-0.5f64 * 2.2).exp();
            assert!((kotz_h_derivative(2.2, k, &g).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(GeneratorSpec::kotz(2.0, -1.0, dims()).is_err());
        let g = GeneratorSpec::kotz(0.5, 1.0, dims()).unwrap();
        assert!(kotz_h(0.0, &g).is_err());
        assert!(kotz_h_derivative(0.0, 1, &g).is_err());
    }
}
