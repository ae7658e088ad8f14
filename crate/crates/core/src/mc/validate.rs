//! Numerical validation of analytic densities: normalization by quadrature,
//! angle-histogram goodness of fit, two-sample histogram comparison,
//! Kolmogorov–Smirnov tests and importance-sampling integrals.
//!
//! The angle routines cover `N = 3` (two shape angles). There the positive
//! definite region is `θ₁ ∈ (0, π/2)` and, writing `c = cot θ₁` and
//! `s* = √(c² + 1) − c`, `θ₂ ∈ (asin s*, π − asin s*)`.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sampler::specimen_rng;
use crate::error::{Error, Result};
use crate::geometry::{sorted_eigenvalues, Dims, PolarShape};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::{chi2_sf, ln_gamma};

/// A shape density as a function of the shape.
pub type ShapeDensity<'a> = dyn Fn(&PolarShape) -> Result<f64> + Sync + 'a;

/// The `θ₂` interval of the positive definite region at a given `θ₁`.
pub fn pd_theta2_interval(theta1: f64) -> Option<(f64, f64)> {
    if !(theta1 > 0.0 && theta1 < FRAC_PI_2) {
        return None;
    }
    let c = theta1.cos() / theta1.sin();
    // √(c²+1) − c written without cancellation
    let s = 1.0 / ((c * c + 1.0).sqrt() + c);
    let lo = s.min(1.0).asin();
    (lo < FRAC_PI_2).then_some((lo, PI - lo))
}

fn require_two_angles(dims: Dims) -> Result<()> {
    if dims.m() != 2 {
        return Err(Error::Unsupported(format!(
            "angle-space validation is implemented for N = 3 only, got N = {}",
            dims.landmarks
        )));
    }
    Ok(())
}

/// `∫∫ f` over `[a1, b1] × [a2, b2]` intersected with the positive definite
/// region.
fn integrate_cell(
    density: &ShapeDensity<'_>,
    (a1, b1): (f64, f64),
    (a2, b2): (f64, f64),
    spec: &QuadratureSpec,
) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let a1 = a1.max(0.0);
    let b1 = b1.min(FRAC_PI_2);
    if a1 >= b1 {
        return Ok(0.0);
    }
    let inner = |t1: f64| -> f64 {
        let Some((lo, hi)) = pd_theta2_interval(t1) else {
            return 0.0;
        };
        let (lo, hi) = (lo.max(a2), hi.min(b2));
        if lo >= hi {
            return 0.0;
        }
        let f = |t2: f64| -> f64 {
            let u = [t1, t2];
            let shape = match PolarShape::from_angles(&u) {
                Ok(s) => s,
                // boundary round-off: the density vanishes or is integrable there
                Err(_) => return 0.0,
            };
            match density(&shape) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        match integrate(f, lo, hi, spec) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer = integrate(inner, a1, b1, spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    outer
}

/// Integral of a shape density over the whole positive definite angle region.
pub fn normalization_check(density: &ShapeDensity<'_>, dims: Dims, spec: &QuadratureSpec) -> Result<f64> {
    require_two_angles(dims)?;
    integrate_cell(density, (0.0, FRAC_PI_2), (0.0, PI), spec)
}

/// Rectangular grid on `[0, π/2] × [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binning {
    pub theta1_bins: usize,
    pub theta2_bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            theta1_bins: 8,
            theta2_bins: 10,
        }
    }
}

impl Binning {
    pub fn cells(&self) -> usize {
        self.theta1_bins * self.theta2_bins
    }

    fn edges1(&self, i: usize) -> (f64, f64) {
        let w = FRAC_PI_2 / self.theta1_bins as f64;
        (i as f64 * w, (i + 1) as f64 * w)
    }

    fn edges2(&self, j: usize) -> (f64, f64) {
        let w = PI / self.theta2_bins as f64;
        (j as f64 * w, (j + 1) as f64 * w)
    }

    /// Row-major cell index of an angle pair.
    pub fn cell_of(&self, u: &[f64]) -> Option<usize> {
        let i = (u[0] / (FRAC_PI_2 / self.theta1_bins as f64)).floor();
        let j = (u[1] / (PI / self.theta2_bins as f64)).floor();
        if i < 0.0 || j < 0.0 || i >= self.theta1_bins as f64 || j >= self.theta2_bins as f64 {
            return None;
        }
        Some(i as usize * self.theta2_bins + j as usize)
    }

    pub fn counts(&self, samples: &[Vec<f64>]) -> Result<Vec<usize>> {
        let mut c = vec![0; self.cells()];
        for (idx, u) in samples.iter().enumerate() {
            let cell = self.cell_of(u).ok_or_else(|| {
                Error::invalid(format!("sample {idx} has angles {u:?} outside the binning range"))
            })?;
            c[cell] += 1;
        }
        Ok(c)
    }
}

/// Probability mass of every cell under `density`, row-major.
pub fn cell_probabilities(
    density: &ShapeDensity<'_>,
    binning: &Binning,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(binning.cells());
    for i in 0..binning.theta1_bins {
        for j in 0..binning.theta2_bins {
            out.push(integrate_cell(density, binning.edges1(i), binning.edges2(j), spec)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Groups left after merging sparse cells.
    pub groups: usize,
    pub samples: usize,
}

/// Consecutive cells (row-major) merged until every group's expected count
/// reaches `min_expected`; a short final run joins the previous group.
fn merge_groups(expected: &[f64], min_expected: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut acc = 0.0;
    for (i, &e) in expected.iter().enumerate() {
        if e <= 0.0 {
            continue;
        }
        cur.push(i);
        acc += e;
        if acc >= min_expected {
            groups.push(std::mem::take(&mut cur));
            acc = 0.0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(cur),
            None => groups.push(cur),
        }
    }
    groups
}

/// Pearson χ² comparison of binned angle samples with the cell masses of
/// an analytic density.
pub fn empirical_vs_analytic(
    samples: &[Vec<f64>],
    density: &ShapeDensity<'_>,
    binning: &Binning,
    spec: &QuadratureSpec,
) -> Result<GofReport> {
    if samples.len() < 1000 {
        return Err(Error::invalid(format!(
            "goodness of fit needs at least 1000 samples, got {}",
            samples.len()
        )));
    }
    let probs = cell_probabilities(density, binning, spec)?;
    let counts = binning.counts(samples)?;
    let n = samples.len() as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    for (i, (&e, &o)) in expected.iter().zip(&counts).enumerate() {
        if e <= 0.0 && o > 0 {
            return Err(Error::invalid(format!(
                "cell {i} has {o} samples but no mass under the density"
            )));
        }
    }
    let groups = merge_groups(&expected, 5.0);
    let mut stat = 0.0;
    for g in &groups {
        let e: f64 = g.iter().map(|&i| expected[i]).sum();
        let o: f64 = g.iter().map(|&i| counts[i] as f64).sum();
        stat += (o - e) * (o - e) / e;
    }
    let df = groups.len().saturating_sub(1).max(1);
    Ok(GofReport {
        statistic: stat,
        df,
        p_value: chi2_sf(stat, df),
        groups: groups.len(),
        samples: samples.len(),
    })
}

/// Two-sample χ² homogeneity test on binned angles.
pub fn two_sample_chi2(a: &[Vec<f64>], b: &[Vec<f64>], binning: &Binning) -> Result<GofReport> {
    let ca = binning.counts(a)?;
    let cb = binning.counts(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    // merge on the smaller sample's expected count
    let pooled: Vec<f64> = ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| (x + y) as f64 * na.min(nb) / total)
        .collect();
    let groups = merge_groups(&pooled, 5.0);
    let mut stat = 0.0;
    for g in &groups {
        let oa: f64 = g.iter().map(|&i| ca[i] as f64).sum();
        let ob: f64 = g.iter().map(|&i| cb[i] as f64).sum();
        let ea = (oa + ob) * na / total;
        let eb = (oa + ob) * nb / total;
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let df = groups.len().saturating_sub(1).max(1);
    Ok(GofReport {
        statistic: stat,
        df,
        p_value: chi2_sf(stat, df),
        groups: groups.len(),
        samples: a.len() + b.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test, with the usual finite-sample
/// adjustment `λ = (√n + 0.12 + 0.11/√n) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsReport {
    let mut x = samples.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    KsReport {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn lower_entries(r: &DMatrix<f64>) -> Vec<f64> {
    let n = r.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            v.push(r[(i, j)]);
        }
    }
    v
}

fn from_lower_entries(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(n, n);
    let mut it = v.iter();
    for j in 0..n {
        for i in j..n {
            let x = *it.next().unwrap();
            r[(i, j)] = x;
            r[(j, i)] = x;
        }
    }
    r
}

/// Importance-sampling estimate of `∫ f(R) dR` over symmetric positive
/// definite `R` (Lebesgue measure on the distinct entries).
///
/// The proposal is a multivariate Student t with 6 degrees of freedom,
/// centred on the mean of `pilot` with 1.5 times its covariance; `pilot`
/// would typically be draws of `R` from the model's sampler.
pub fn importance_integral(
    f: &(dyn Fn(&DMatrix<f64>) -> Result<f64> + Sync),
    pilot: &[DMatrix<f64>],
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if pilot.len() < 10 || n < 2 {
        return Err(Error::invalid("importance sampling needs ≥ 10 pilot draws and n ≥ 2"));
    }
    let order = pilot[0].nrows();
    let d = order * (order + 1) / 2;
    let rows: Vec<Vec<f64>> = pilot.iter().map(lower_entries).collect();
    let np = rows.len() as f64;
    let mean = DVector::from_fn(d, |i, _| rows.iter().map(|r| r[i]).sum::<f64>() / np);
    let mut cov = DMatrix::zeros(d, d);
    for r in &rows {
        let x = DVector::from_column_slice(r) - &mean;
        cov += &x * x.transpose();
    }
    cov *= 1.5 / (np - 1.0);
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("pilot covariance is singular"))?;
    let l = chol.l();
    let ln_det: f64 = l.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let nu = 6.0;
    let df = d as f64;
    let ln_norm = ln_gamma((nu + df) / 2.0)
        - ln_gamma(nu / 2.0)
        - df / 2.0 * (nu * PI).ln()
        - 0.5 * ln_det;
    let chi = ChiSquared::new(nu).expect("positive degrees of freedom");

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n {
        let mut rng = specimen_rng(seed, i);
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let w: f64 = chi.sample(&mut rng);
        let x = &mean + &l * z.clone() * (nu / w).sqrt();
        let dev = &x - &mean;
        let maha = chol.solve(&dev).dot(&dev);
        let ln_g = ln_norm - (nu + df) / 2.0 * (1.0 + maha / nu).ln();
        let r = from_lower_entries(x.as_slice(), order);
        let v = if sorted_eigenvalues(&r)[0] > 0.0 {
            f(&r)? / ln_g.exp()
        } else {
            0.0
        };
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let est = sum / nf;
    let var = (sum_sq / nf - est * est).max(0.0) / (nf - 1.0);
    Ok(McEstimate {
        estimate: est,
        std_error: var.sqrt(),
    })
}
