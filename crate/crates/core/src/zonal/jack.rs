//! Eigenvalue route: Jack polynomials at α = 2 evaluated through the
//! horizontal-strip branching rule
//!
//! ```text
//! P_κ(x_1..x_k) = Σ_{μ ≺ κ} P_μ(x_1..x_{k-1}) · x_k^{|κ|-|μ|} · ψ_{κ/μ}
//! ```
//!
//! with `P` the monic normalization, and `C_κ = α^t t! / Π h*_κ(s) · P_κ`.
//! [`SeriesTable`] precomputes every branching coefficient needed for the
//! degree sums `Σ_{κ ⊢ t} C_κ(x) / (b)_κ` so that a whole truncated series
//! costs one pass over the table per argument.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::partition::{enumerate_partitions, Partition};
use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_gamma, SignedLog};

pub(crate) const ALPHA: f64 = 2.0;

/// Branching coefficient `ψ_{κ/μ}` of the monic Jack polynomials, for a
/// horizontal strip `κ/μ`.
///
/// Only cells lying in a row that the strip touches and in a column that it
/// does not touch contribute, each by `b_μ(s) / b_κ(s)` where
/// `b_λ(s) = (α a + l + 1) / (α (a + 1) + l)`.
pub(crate) fn branching_coefficient(kappa: &Partition, mu: &Partition, alpha: f64) -> f64 {
    let kc = kappa.conjugate();
    let mc = mu.conjugate();
    let mut psi = 1.0;
    for i in 0..kappa.len() {
        let (ki, mi) = (kappa.part(i), mu.part(i));
        if ki == mi {
            continue;
        }
        for j in 0..mi {
            if kc.part(j) != mc.part(j) {
                continue;
            }
            let leg = (kc.part(j) - i - 1) as f64;
            let b = |arm: f64| (alpha * arm + leg + 1.0) / (alpha * (arm + 1.0) + leg);
            psi *= b((mi - j - 1) as f64) / b((ki - j - 1) as f64);
        }
    }
    psi
}

/// Monic Jack polynomial `P_κ^{(α)}(x)`.
pub(crate) fn jack_p(kappa: &Partition, x: &[f64], alpha: f64) -> f64 {
    let mut memo = HashMap::new();
    jack_p_rec(kappa, x, alpha, &mut memo)
}

fn jack_p_rec(
    kappa: &Partition,
    x: &[f64],
    alpha: f64,
    memo: &mut HashMap<(Partition, usize), f64>,
) -> f64 {
    let k = x.len();
    if kappa.len() > k {
        return 0.0;
    }
    if kappa.is_empty() {
        return 1.0;
    }
    if k == 1 {
        return x[0].powi(kappa.part(0) as i32);
    }
    if let Some(v) = memo.get(&(kappa.clone(), k)) {
        return *v;
    }
    let last = x[k - 1];
    let weight = kappa.weight();
    let mut acc = 0.0;
    for mu in kappa.horizontal_strips_below(k - 1) {
        let d = weight - mu.weight();
        let xp = if d == 0 { 1.0 } else { last.powi(d as i32) };
        if xp == 0.0 {
            continue;
        }
        acc += jack_p_rec(&mu, &x[..k - 1], alpha, memo) * xp * branching_coefficient(kappa, &mu, alpha);
    }
    memo.insert((kappa.clone(), k), acc);
    acc
}

/// `ln(α^t t! / Π h*_κ)`, the factor converting monic `P_κ` into `C_κ`.
pub(crate) fn ln_c_normalization(kappa: &Partition) -> f64 {
    let t = kappa.weight();
    t as f64 * ALPHA.ln() + ln_factorial(t) - kappa.ln_upper_hook_product(ALPHA)
}

/// Zonal polynomial `C_κ` evaluated at a spectrum.
pub fn zonal_from_spectrum(kappa: &Partition, spectrum: &[f64]) -> f64 {
    if kappa.len() > spectrum.len() {
        return 0.0;
    }
    if kappa.is_empty() {
        return 1.0;
    }
    ln_c_normalization(kappa).exp() * jack_p(kappa, spectrum, ALPHA)
}

/// `ln (b)_κ`, failing if any factor is not strictly positive.
pub(crate) fn ln_gen_pochhammer_positive(b: f64, kappa: &Partition) -> Result<f64> {
    let mut acc = 0.0;
    for (i, &p) in kappa.parts().iter().enumerate() {
        let base = b - i as f64 / 2.0;
        if base <= 0.0 {
            return Err(Error::invalid(format!(
                "generalized Pochhammer ({b})_{kappa} has a non-positive factor"
            )));
        }
        acc += ln_gamma(base + p as f64) - ln_gamma(base);
    }
    Ok(acc)
}

#[derive(Debug)]
struct Level {
    weights: Vec<usize>,
    /// (κ index in this level, μ index in the previous level, x-power, ψ)
    pairs: Vec<(usize, usize, usize, f64)>,
}

#[derive(Debug)]
struct TopEntry {
    mu: usize,
    power: usize,
    weight: f64,
}

/// Precomputed branching data for the per-degree sums
/// `S_t(x) = (1/t!) Σ_{κ ⊢ t, ℓ(κ) ≤ p} C_κ(x) / (b)_κ` at a fixed number of
/// variables `p` and denominator parameter `b`.
#[derive(Debug)]
pub struct SeriesTable {
    nvars: usize,
    b: f64,
    max_degree: usize,
    levels: Vec<Level>,
    top: Vec<Vec<TopEntry>>,
    /// `ln ν_t = -ln t! - ln (b)_t`; the table weights are stored relative to it.
    ln_norm: Vec<f64>,
}

impl SeriesTable {
    pub fn new(nvars: usize, b: f64, max_degree: usize) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::invalid("series table needs at least one variable"));
        }
        if !(b > (nvars as f64 - 1.0) / 2.0) {
            return Err(Error::invalid(format!(
                "denominator parameter {b} too small for {nvars} variables"
            )));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(nvars);
        let mut level_parts: Vec<Vec<Partition>> = Vec::with_capacity(nvars);
        let mut level_index: Vec<HashMap<Partition, usize>> = Vec::with_capacity(nvars);
        for k in 0..nvars {
            let parts: Vec<Partition> = (0..=max_degree)
                .flat_map(|t| enumerate_partitions(t, k))
                .collect();
            let index: HashMap<Partition, usize> =
                parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
            let mut pairs = Vec::new();
            if k > 0 {
                for (ki, kappa) in parts.iter().enumerate() {
                    for mu in kappa.horizontal_strips_below(k - 1) {
                        let mi = level_index[k - 1][&mu];
                        let psi = branching_coefficient(kappa, &mu, ALPHA);
                        pairs.push((ki, mi, kappa.weight() - mu.weight(), psi));
                    }
                }
            }
            levels.push(Level {
                weights: parts.iter().map(Partition::weight).collect(),
                pairs,
            });
            level_parts.push(parts);
            level_index.push(index);
        }

        let mut top = Vec::with_capacity(max_degree + 1);
        let mut ln_norm = Vec::with_capacity(max_degree + 1);
        for t in 0..=max_degree {
            let ln_nu = -ln_factorial(t) - (ln_gamma(b + t as f64) - ln_gamma(b));
            ln_norm.push(ln_nu);
            let mut acc: HashMap<usize, f64> = HashMap::new();
            for kappa in enumerate_partitions(t, nvars) {
                let ln_w = ln_c_normalization(&kappa)
                    - ln_factorial(t)
                    - ln_gen_pochhammer_positive(b, &kappa)?
                    - ln_nu;
                let w = ln_w.exp();
                for mu in kappa.horizontal_strips_below(nvars - 1) {
                    let mi = level_index[nvars - 1][&mu];
                    *acc.entry(mi).or_insert(0.0) += w * branching_coefficient(&kappa, &mu, ALPHA);
                }
            }
            let mut entries: Vec<TopEntry> = acc
                .into_iter()
                .map(|(mu, weight)| TopEntry {
                    mu,
                    power: t - levels[nvars - 1].weights[mu],
                    weight,
                })
                .collect();
            entries.sort_by_key(|e| e.mu);
            top.push(entries);
        }
        Ok(SeriesTable {
            nvars,
            b,
            max_degree,
            levels,
            top,
            ln_norm,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `S_t(x)` for `t = 0..=max_degree` in sign/log form. `x` may be shorter
    /// than the table's variable count (missing entries are zero).
    pub fn degree_terms(&self, x: &[f64]) -> Result<Vec<SignedLog>> {
        if x.len() > self.nvars {
            return Err(Error::invalid(format!(
                "{} eigenvalues supplied to a {}-variable series table",
                x.len(),
                self.nvars
            )));
        }
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out = Vec::with_capacity(self.max_degree + 1);
        out.push(SignedLog::positive(0.0));
        if scale == 0.0 {
            out.extend(std::iter::repeat(SignedLog::ZERO).take(self.max_degree));
            return Ok(out);
        }
        let mut y = vec![0.0; self.nvars];
        for (i, v) in x.iter().enumerate() {
            y[i] = v / scale;
        }
        let powers: Vec<Vec<f64>> = y
            .iter()
            .map(|&v| {
                let mut p = Vec::with_capacity(self.max_degree + 1);
                let mut acc = 1.0;
                for _ in 0..=self.max_degree {
                    p.push(acc);
                    acc *= v;
                }
                p
            })
            .collect();

        let mut vals = vec![1.0f64];
        for k in 1..self.nvars {
            let level = &self.levels[k];
            let mut next = vec![0.0f64; level.weights.len()];
            let pw = &powers[k - 1];
            for &(ki, mi, d, psi) in &level.pairs {
                next[ki] += vals[mi] * pw[d] * psi;
            }
            vals = next;
        }
        let pw = &powers[self.nvars - 1];
        let ln_scale = scale.ln();
        for t in 1..=self.max_degree {
            let d: f64 = self.top[t]
                .iter()
                .map(|e| e.weight * vals[e.mu] * pw[e.power])
                .sum();
            out.push(SignedLog::from_f64(d).mul_ln(t as f64 * ln_scale + self.ln_norm[t]));
        }
        Ok(out)
    }
}

type TableKey = (usize, u64);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<SeriesTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<SeriesTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared table for `(nvars, b)` covering at least `max_degree`.
pub fn series_table(nvars: usize, b: f64, max_degree: usize) -> Result<Arc<SeriesTable>> {
    let key = (nvars, b.to_bits());
    if let Some(t) = table_cache().lock().unwrap().get(&key) {
        if t.max_degree >= max_degree {
            return Ok(Arc::clone(t));
        }
    }
    // round up so that small increments do not trigger rebuilds
    let degree = max_degree.div_ceil(16) * 16;
    let table = Arc::new(SeriesTable::new(nvars, b, degree)?);
    table_cache().lock().unwrap().insert(key, Arc::clone(&table));
    Ok(table)
}
