//! Power-sum route: `C_κ` expanded in the power-sum basis `p_ρ = Π_i tr(M^{ρ_i})`.
//!
//! The expansion is built exactly over the rationals. Monomial symmetric
//! functions are expressed in power sums by inverting the (triangular)
//! `p → m` transition matrix, and the Jack `P` basis at α = 2 is obtained by
//! Gram–Schmidt in the deformed Hall inner product
//! `⟨p_ρ, p_σ⟩ = δ_ρσ z_ρ α^{ℓ(ρ)}`, processing partitions from `(1^t)` up
//! to `(t)`. Because only traces enter, the route applies to non-symmetric
//! arguments without an eigendecomposition.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::partition::{enumerate_partitions, Partition};
use crate::error::{Error, Result};

/// Largest degree for which the power-sum expansion is built.
pub const POWER_SUM_MAX_DEGREE: usize = 12;

const ALPHA: i64 = 2;

/// All `C_κ`, `κ ⊢ t`, as coefficient vectors over the `p_ρ` basis.
#[derive(Debug)]
pub struct PowerSumExpansion {
    degree: usize,
    partitions: Vec<Partition>,
    index: HashMap<Partition, usize>,
    /// `coeffs[κ][ρ]`, both indexed into `partitions`.
    coeffs: Vec<Vec<f64>>,
}

impl PowerSumExpansion {
    #[cfg(test)]
    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// `C_κ` given the power sums `p[j-1] = tr(M^j)` for `j = 1..=t`.
    pub fn evaluate(&self, kappa: &Partition, power_sums: &[f64]) -> Result<f64> {
        let k = *self.index.get(kappa).ok_or_else(|| {
            Error::invalid(format!("{kappa} is not a partition of {}", self.degree))
        })?;
        if power_sums.len() < self.degree {
            return Err(Error::InsufficientPowerSums {
                needed: self.degree,
                available: power_sums.len(),
            });
        }
        Ok(self
            .partitions
            .iter()
            .zip(&self.coeffs[k])
            .filter(|(_, c)| **c != 0.0)
            .map(|(rho, c)| c * rho.parts().iter().map(|&j| power_sums[j - 1]).product::<f64>())
            .sum())
    }
}

fn multiplicities(p: &Partition) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    for &v in p.parts() {
        *m.entry(v).or_insert(0) += 1;
    }
    m
}

/// `m_λ · p_k` in the monomial basis.
fn times_power_sum(lambda: &Partition, k: usize) -> Vec<(Partition, u64)> {
    let mut values: Vec<usize> = lambda.parts().to_vec();
    values.dedup();
    values.push(0);
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        let mut parts = lambda.parts().to_vec();
        if v == 0 {
            parts.push(k);
        } else {
            let pos = parts.iter().position(|&x| x == v).unwrap();
            parts[pos] = v + k;
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let mu = Partition::from_sorted_unchecked(parts);
        let coef = mu.parts().iter().filter(|&&x| x == v + k).count() as u64;
        out.push((mu, coef));
    }
    out
}

/// Monomial expansion of `p_ρ`.
fn power_sum_in_monomials(rho: &Partition) -> HashMap<Partition, BigInt> {
    let mut cur: HashMap<Partition, BigInt> = HashMap::new();
    cur.insert(Partition::empty(), BigInt::one());
    for &k in rho.parts() {
        let mut next: HashMap<Partition, BigInt> = HashMap::new();
        for (lambda, c) in &cur {
            for (mu, m) in times_power_sum(lambda, k) {
                *next.entry(mu).or_insert_with(BigInt::zero) += c * BigInt::from(m);
            }
        }
        cur = next;
    }
    cur
}

/// `z_ρ α^{ℓ(ρ)}`.
fn hall_norm(rho: &Partition) -> BigInt {
    let mut z = BigInt::one();
    for (&v, &m) in &multiplicities(rho) {
        z *= BigInt::from(v).pow(m as u32);
        for i in 2..=m {
            z *= BigInt::from(i);
        }
    }
    z * BigInt::from(ALPHA).pow(rho.len() as u32)
}

fn build(t: usize) -> PowerSumExpansion {
    let partitions = enumerate_partitions(t, t.max(1));
    let n = partitions.len();
    let index: HashMap<Partition, usize> =
        partitions.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();

    // lmat[ρ][λ]: coefficient of m_λ in p_ρ; nonzero only for λ at or before ρ
    let mut lmat = vec![vec![BigRational::zero(); n]; n];
    for (r, rho) in partitions.iter().enumerate() {
        for (lambda, c) in power_sum_in_monomials(rho) {
            lmat[r][index[&lambda]] = BigRational::from_integer(c);
        }
    }
    // m = L^{-1} p, computed by substitution from the front
    let mut inv = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        let diag = lmat[i][i].clone();
        let mut row = vec![BigRational::zero(); n];
        row[i] = BigRational::one();
        for j in 0..i {
            if lmat[i][j].is_zero() {
                continue;
            }
            for k in 0..n {
                if !inv[j][k].is_zero() {
                    row[k] -= &lmat[i][j] * &inv[j][k];
                }
            }
        }
        for v in row.iter_mut() {
            *v /= &diag;
        }
        inv[i] = row;
    }

    let weights: Vec<BigRational> = partitions
        .iter()
        .map(|p| BigRational::from_integer(hall_norm(p)))
        .collect();
    let inner = |a: &[BigRational], b: &[BigRational]| -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..n {
            if !a[i].is_zero() && !b[i].is_zero() {
                acc += &a[i] * &b[i] * &weights[i];
            }
        }
        acc
    };

    let mut jack: Vec<Vec<BigRational>> = vec![Vec::new(); n];
    let mut norms: Vec<BigRational> = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut v = inv[i].clone();
        for j in (i + 1)..n {
            let c = inner(&inv[i], &jack[j]) / &norms[j];
            if c.is_zero() {
                continue;
            }
            for k in 0..n {
                if !jack[j][k].is_zero() {
                    v[k] -= &c * &jack[j][k];
                }
            }
        }
        norms[i] = inner(&v, &v);
        jack[i] = v;
    }

    let coeffs = partitions
        .iter()
        .zip(&jack)
        .map(|(kappa, p)| {
            let scale = c_normalization(kappa);
            p.iter()
                .map(|c| (c * &scale).to_f64().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    PowerSumExpansion {
        degree: t,
        partitions,
        index,
        coeffs,
    }
}

/// `α^t t! / Π h*_κ(s)` with upper hooks `l + α(a + 1)`, all integers at α = 2.
fn c_normalization(kappa: &Partition) -> BigRational {
    let t = kappa.weight();
    let mut num = BigInt::from(ALPHA).pow(t as u32);
    for i in 2..=t {
        num *= BigInt::from(i);
    }
    let conj = kappa.conjugate();
    let mut den = BigInt::one();
    for (i, &row) in kappa.parts().iter().enumerate() {
        for j in 0..row {
            let arm = (row - j - 1) as i64;
            let leg = (conj.part(j) - i - 1) as i64;
            den *= BigInt::from(leg + ALPHA * (arm + 1));
        }
    }
    BigRational::new(num, den)
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<PowerSumExpansion>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PowerSumExpansion>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached expansion of every `C_κ` of degree `t`.
pub fn expansion(t: usize) -> Result<Arc<PowerSumExpansion>> {
    if t > POWER_SUM_MAX_DEGREE {
        return Err(Error::Unsupported(format!(
            "power-sum expansion limited to degree {POWER_SUM_MAX_DEGREE}, requested {t}"
        )));
    }
    if let Some(e) = cache().lock().unwrap().get(&t) {
        return Ok(Arc::clone(e));
    }
    let e = Arc::new(build(t));
    cache().lock().unwrap().insert(t, Arc::clone(&e));
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn degree_two_coefficients() {
        let e = expansion(2).unwrap();
        // C_(2) = (1/3)(p1² + 2 p2), C_(1,1) = (2/3)(p1² - p2)
        let ps = [3.0, 5.0];
        assert!((e.evaluate(&part(&[2]), &ps).unwrap() - (9.0 + 10.0) / 3.0).abs() < 1e-14);
        assert!((e.evaluate(&part(&[1, 1]), &ps).unwrap() - 2.0 * (9.0 - 5.0) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn p1_power_is_recovered() {
        for t in 1..=7 {
            let e = expansion(t).unwrap();
            let ps: Vec<f64> = (1..=t).map(|j| 0.7f64.powi(j as i32) + 0.2).collect();
            let total: f64 = e.partitions().iter().map(|k| e.evaluate(k, &ps).unwrap()).sum();
            assert!((total - ps[0].powi(t as i32)).abs() < 1e-12 * ps[0].powi(t as i32));
        }
    }

    #[test]
    fn short_power_sums_are_rejected() {
        let e = expansion(3).unwrap();
        assert!(matches!(
            e.evaluate(&part(&[2, 1]), &[1.0, 2.0]),
            Err(Error::InsufficientPowerSums { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn monomial_expansion_of_p2_p1() {
        // p2 p1 = m_(3) + m_(2,1)
        let m = power_sum_in_monomials(&part(&[2, 1]));
        assert_eq!(m[&part(&[3])], BigInt::one());
        assert_eq!(m[&part(&[2, 1])], BigInt::one());
        assert_eq!(m.len(), 2);
    }
}
