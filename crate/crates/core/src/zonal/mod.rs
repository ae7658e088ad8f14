//! Partitions, generalized Pochhammer symbols, zonal polynomials and the
//! per-degree terms `S_t(A) = (1/t!) Σ_{κ ⊢ t} C_κ(A) / (a)_κ`.
//!
//! Two evaluation routes are available. Symmetric arguments and explicit
//! spectra go through the Jack branching recursion (see [`SeriesTable`]).
//! Arguments given as a non-symmetric matrix or as power sums go through an
//! exact power-sum expansion, available up to [`POWER_SUM_MAX_DEGREE`].

mod jack;
pub mod partition;
mod powersum;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, LogAccumulator, SignedLog};

pub use jack::{series_table, SeriesTable};
pub use partition::{enumerate_partitions, Partition};
pub use powersum::POWER_SUM_MAX_DEGREE;

/// Truncation policy for infinite zonal series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub max_degree: usize,
    pub rel_tol: f64,
    pub consecutive_small: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_degree: 60,
            rel_tol: 1e-12,
            consecutive_small: 3,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.consecutive_small == 0 {
            return Err(Error::invalid(format!(
                "series control needs rel_tol > 0 and consecutive_small ≥ 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Sum `Σ_t term(t)` under `ctl`, in ascending `t`.
///
/// Fails with [`Error::SeriesNonConvergence`] when `max_degree` is reached
/// before `consecutive_small` successive terms fall below
/// `rel_tol · |partial sum|`.
pub fn sum_series(
    ctl: &SeriesControl,
    mut term: impl FnMut(usize) -> Result<SignedLog>,
) -> Result<SignedLog> {
    ctl.validate()?;
    let ln_tol = ctl.rel_tol.ln();
    let mut acc = LogAccumulator::new();
    let mut small = 0;
    let mut last = SignedLog::ZERO;
    for t in 0..=ctl.max_degree {
        last = term(t)?;
        acc.add(last);
        let partial = acc.value();
        if last.is_zero() || (!partial.is_zero() && last.ln_abs < partial.ln_abs + ln_tol) {
            small += 1;
            if small >= ctl.consecutive_small {
                return Ok(partial);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNonConvergence {
        max_degree: ctl.max_degree,
        log_partial: acc.value().ln_abs,
        log_last_term: last.ln_abs,
    })
}

/// Argument of a zonal polynomial.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixArgument {
    Matrix(DMatrix<f64>),
    Spectrum(Vec<f64>),
    /// `sums[j-1] = tr(M^j)` for a `dim × dim` matrix `M`.
    PowerSums { dim: usize, sums: Vec<f64> },
}

impl MatrixArgument {
    pub fn matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::invalid(format!(
                "zonal argument must be a non-empty square matrix, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("zonal argument has non-finite entries"));
        }
        Ok(MatrixArgument::Matrix(m))
    }

    pub fn spectrum(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrum must be non-empty and finite"));
        }
        Ok(MatrixArgument::Spectrum(x))
    }

    pub fn power_sums(dim: usize, sums: Vec<f64>) -> Result<Self> {
        if dim == 0 || sums.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("power sums need dim ≥ 1 and finite values"));
        }
        Ok(MatrixArgument::PowerSums { dim, sums })
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixArgument::Matrix(m) => m.nrows(),
            MatrixArgument::Spectrum(x) => x.len(),
            MatrixArgument::PowerSums { dim, .. } => *dim,
        }
    }

    /// `tr(M^j)` for `j = 1..=depth`.
    pub fn power_sums_to(&self, depth: usize) -> Result<Vec<f64>> {
        match self {
            MatrixArgument::Matrix(m) => {
                let mut out = Vec::with_capacity(depth);
                let mut pow = m.clone();
                for j in 0..depth {
                    if j > 0 {
                        pow = &pow * m;
                    }
                    out.push(pow.trace());
                }
                Ok(out)
            }
            MatrixArgument::Spectrum(x) => Ok((1..=depth)
                .map(|j| x.iter().map(|v| v.powi(j as i32)).sum())
                .collect()),
            MatrixArgument::PowerSums { sums, .. } => {
                if sums.len() < depth {
                    return Err(Error::InsufficientPowerSums {
                        needed: depth,
                        available: sums.len(),
                    });
                }
                Ok(sums[..depth].to_vec())
            }
        }
    }

    /// Real eigenvalues when they are available without a general eigensolver:
    /// explicit spectra and symmetric matrices.
    fn symmetric_spectrum(&self) -> Option<Vec<f64>> {
        match self {
            MatrixArgument::Spectrum(x) => Some(x.clone()),
            MatrixArgument::Matrix(m) => {
                let scale = m.norm().max(f64::MIN_POSITIVE);
                if (m - m.transpose()).norm() <= 1e-12 * scale {
                    let sym = (m + m.transpose()) * 0.5;
                    Some(sym.symmetric_eigenvalues().iter().cloned().collect())
                } else {
                    None
                }
            }
            MatrixArgument::PowerSums { .. } => None,
        }
    }

    /// Eigenvalues, accepting a non-symmetric matrix only when its spectrum is
    /// real to working precision.
    pub fn real_spectrum(&self) -> Result<Vec<f64>> {
        if let Some(x) = self.symmetric_spectrum() {
            return Ok(x);
        }
        match self {
            MatrixArgument::Matrix(m) => {
                let ev = m.complex_eigenvalues();
                let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
                if ev.iter().any(|z| z.im.abs() > 1e-9 * scale) {
                    return Err(Error::Unsupported(
                        "matrix argument has a complex spectrum".into(),
                    ));
                }
                Ok(ev.iter().map(|z| z.re).collect())
            }
            _ => Err(Error::Unsupported(
                "eigenvalues are not recoverable from a truncated list of power sums".into(),
            )),
        }
    }
}

/// Generalized Pochhammer symbol `(a)_κ = Π_i Π_{j=1}^{κ_i} (a − (i−1)/2 + j − 1)`.
pub fn gen_pochhammer(a: f64, kappa: &Partition) -> f64 {
    let mut acc = 1.0;
    for (i, &p) in kappa.parts().iter().enumerate() {
        for j in 0..p {
            acc *= a - i as f64 / 2.0 + j as f64;
        }
    }
    acc
}

/// Zonal polynomial `C_κ(A)`, normalized so that `Σ_{κ ⊢ t} C_κ(A) = (tr A)^t`.
pub fn zonal_c(kappa: &Partition, arg: &MatrixArgument) -> Result<f64> {
    if kappa.is_empty() {
        return Ok(1.0);
    }
    if kappa.len() > arg.dim() {
        return Ok(0.0);
    }
    if let Some(x) = arg.symmetric_spectrum() {
        return Ok(jack::zonal_from_spectrum(kappa, &x));
    }
    let t = kappa.weight();
    if t <= POWER_SUM_MAX_DEGREE {
        let ps = arg.power_sums_to(t)?;
        return powersum::expansion(t)?.evaluate(kappa, &ps);
    }
    if let MatrixArgument::PowerSums { sums, .. } = arg {
        if sums.len() < t {
            return Err(Error::InsufficientPowerSums {
                needed: t,
                available: sums.len(),
            });
        }
    }
    Ok(jack::zonal_from_spectrum(kappa, &arg.real_spectrum()?))
}

/// `S_t(A) = (1/t!) Σ_{κ ⊢ t, ℓ(κ) ≤ dim} C_κ(A) / (a)_κ`.
pub fn degree_term(t: usize, a: f64, arg: &MatrixArgument) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("degree term needs a > 0, got {a}")));
    }
    if t == 0 {
        return Ok(1.0);
    }
    let spectrum = arg.symmetric_spectrum();
    let ps = match (&spectrum, t <= POWER_SUM_MAX_DEGREE) {
        (None, true) => Some(arg.power_sums_to(t)?),
        _ => None,
    };
    let spectrum = match (spectrum, &ps) {
        (Some(x), _) => Some(x),
        (None, Some(_)) => None,
        (None, None) => Some(arg.real_spectrum()?),
    };
    let mut acc = 0.0;
    for kappa in enumerate_partitions(t, arg.dim()) {
        let c = match (&spectrum, &ps) {
            (Some(x), _) => jack::zonal_from_spectrum(&kappa, x),
            (None, Some(p)) => powersum::expansion(t)?.evaluate(&kappa, p)?,
            (None, None) => unreachable!(),
        };
        if c == 0.0 {
            continue;
        }
        let poch = gen_pochhammer(a, &kappa);
        if poch == 0.0 {
            return Err(Error::invalid(format!(
                "({a})_{kappa} vanishes while C_{kappa} does not"
            )));
        }
        acc += c / poch;
    }
    Ok(acc / ln_factorial(t).exp())
}

/// `S_t(A)` for `t = 0..=max_degree` in sign/log form, through the shared
/// branching table for `(dim, a)`. The argument's spectrum must be real.
pub fn log_degree_terms(a: f64, arg: &MatrixArgument, max_degree: usize) -> Result<Vec<SignedLog>> {
    let x = arg.real_spectrum()?;
    let table = series_table(x.len(), a, max_degree)?;
    let mut terms = table.degree_terms(&x)?;
    terms.truncate(max_degree + 1);
    Ok(terms)
}

/// Truncated `Σ_t S_t(A)`, the Bessel-type hypergeometric series
/// `₀F₁(a; A)` of a matrix argument.
pub fn hypergeometric_0f1(a: f64, arg: &MatrixArgument, ctl: &SeriesControl) -> Result<f64> {
    let terms = log_degree_terms(a, arg, ctl.max_degree)?;
    Ok(sum_series(ctl, |t| Ok(terms[t]))?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(gen_pochhammer(0.7, &Partition::empty()), 1.0);
        assert_eq!(gen_pochhammer(0.7, &part(&[1])), 0.7);
        assert!((gen_pochhammer(1.0, &part(&[2, 2])) - 1.5).abs() < 1e-15);
        // one row: rising factorial
        assert!((gen_pochhammer(2.5, &part(&[3])) - 2.5 * 3.5 * 4.5).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_matrix_agrees_with_its_spectrum() {
        // similar to diag(1, 3) but not symmetric
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let arg = MatrixArgument::matrix(m).unwrap();
        let spec = MatrixArgument::spectrum(vec![1.0, 3.0]).unwrap();
        for t in 0..=6 {
            for k in enumerate_partitions(t, 2) {
                let a = zonal_c(&k, &arg).unwrap();
                let b = zonal_c(&k, &spec).unwrap();
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_argument_kills_positive_degrees() {
        let z = MatrixArgument::spectrum(vec![0.0; 3]).unwrap();
        assert_eq!(zonal_c(&part(&[2, 1]), &z).unwrap(), 0.0);
        for t in 1..5 {
            assert_eq!(degree_term(t, 1.0, &z).unwrap(), 0.0);
        }
        assert_eq!(degree_term(0, 1.0, &z).unwrap(), 1.0);
    }

    #[test]
    fn series_stops_on_small_terms() {
        let ctl = SeriesControl::default();
        let s = sum_series(&ctl, |t| Ok(SignedLog::from_f64(0.5f64.powi(t as i32)))).unwrap();
        assert!((s.to_f64() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn series_reports_non_convergence() {
        let ctl = SeriesControl {
            max_degree: 10,
            ..Default::default()
        };
        let e = sum_series(&ctl, |_| Ok(SignedLog::from_f64(1.0))).unwrap_err();
        assert!(matches!(e, Error::SeriesNonConvergence { max_degree: 10, .. }));
    }

    #[test]
    fn log_terms_match_direct_degree_terms() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let arg = MatrixArgument::matrix(m).unwrap();
        let terms = log_degree_terms(1.0, &arg, 12).unwrap();
        for t in 0..=12 {
            let d = degree_term(t, 1.0, &arg).unwrap();
            assert!((terms[t].to_f64() - d).abs() <= 1e-12 * d.abs());
        }
    }
}
