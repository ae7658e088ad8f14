//! Log-gamma family helpers and a signed log-space accumulator.

pub use statrs::function::gamma::ln_gamma;

/// `ln Γ_p(a)`, the multivariate gamma function, as
/// `p(p-1)/4 · ln π + Σ_{i=1}^{p} ln Γ(a - (i-1)/2)`.
pub fn ln_multivariate_gamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    let mut acc = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for i in 0..p {
        acc += ln_gamma(a - i as f64 / 2.0);
    }
    acc
}

pub fn ln_factorial(t: usize) -> f64 {
    ln_gamma(t as f64 + 1.0)
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Falling factorial `x (x-1) ... (x-m+1)`; 1 for `m = 0`.
pub fn falling_factorial(x: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (x - i as f64))
}

/// Upper tail `P(χ²_df > x)` via the regularized upper incomplete gamma
/// function `Q(df/2, x/2)`.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// A real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: x.signum(),
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn positive(ln_abs: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1.0, ln_abs }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    pub fn mul(self, other: SignedLog) -> SignedLog {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }

    pub fn mul_ln(self, ln_factor: f64) -> SignedLog {
        if self.is_zero() {
            return self;
        }
        SignedLog {
            sign: self.sign,
            ln_abs: self.ln_abs + ln_factor,
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Running sum of signed terms given in log form. The accumulator is kept
/// relative to the largest magnitude seen so that neither overflow nor
/// underflow occurs for terms spanning hundreds of orders of magnitude.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    scale: f64,
    acc: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        LogAccumulator {
            scale: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn add(&mut self, term: SignedLog) {
        if term.is_zero() {
            return;
        }
        if term.ln_abs > self.scale {
            if self.scale != f64::NEG_INFINITY {
                self.acc *= (self.scale - term.ln_abs).exp();
            }
            self.scale = term.ln_abs;
        }
        self.acc += term.sign * (term.ln_abs - self.scale).exp();
    }

    pub fn value(&self) -> SignedLog {
        if self.acc == 0.0 || self.scale == f64::NEG_INFINITY {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.acc.signum(),
            ln_abs: self.scale + self.acc.abs().ln(),
        }
    }
}

/// `ln(Σ exp(x_i))` over finite and `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multivariate_gamma_reduces_to_gamma_for_p1() {
        assert!((ln_multivariate_gamma(1, 3.5) - ln_gamma(3.5)).abs() < 1e-14);
        // Γ_2(1) = π^{1/2} Γ(1) Γ(1/2) = π
        assert!((ln_multivariate_gamma(2, 1.0) - std::f64::consts::PI.ln()).abs() < 1e-13);
    }

    #[test]
    fn accumulator_handles_wide_range_and_cancellation() {
        let mut acc = LogAccumulator::new();
        acc.add(SignedLog::positive(-800.0));
        acc.add(SignedLog::positive(5.0));
        acc.add(SignedLog { sign: -1.0, ln_abs: 5.0 });
        acc.add(SignedLog::positive(2.0f64.ln()));
        let v = acc.value();
        assert_eq!(v.sign, 1.0);
        assert!((v.to_f64() - 2.0).abs() < 1e-12);

        let mut big = LogAccumulator::new();
        big.add(SignedLog::positive(1000.0));
        big.add(SignedLog::positive(1000.0));
        assert!((big.value().ln_abs - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn binomial_and_falling() {
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(falling_factorial(1.0, 2), 0.0);
        assert_eq!(falling_factorial(5.0, 3), 60.0);
    }
}
