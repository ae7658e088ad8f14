//! Integer partitions indexing the zonal polynomials.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A weakly decreasing sequence of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// Builds a partition, dropping trailing zeros. Fails if the parts are
    /// not weakly decreasing.
    pub fn new(parts: impl Into<Vec<usize>>) -> Result<Self> {
        let mut parts = parts.into();
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!(
                "partition parts must be weakly decreasing, got {parts:?}"
            )));
        }
        if parts.contains(&0) {
            return Err(Error::invalid("partition contains an interior zero"));
        }
        Ok(Partition { parts })
    }

    pub(crate) fn from_sorted_unchecked(mut parts: Vec<usize>) -> Self {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        Partition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Part `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Conjugate partition: column lengths of the Young diagram.
    pub fn conjugate(&self) -> Partition {
        let first = self.part(0);
        let parts = (1..=first)
            .map(|j| self.parts.iter().take_while(|&&p| p >= j).count())
            .collect();
        Partition { parts }
    }

    /// Upper hook length `l(s) + α(a(s) + 1)` of cell `(i, j)` (0-based).
    pub(crate) fn upper_hook(&self, conj: &Partition, i: usize, j: usize, alpha: f64) -> f64 {
        let arm = (self.parts[i] - j - 1) as f64;
        let leg = (conj.parts[j] - i - 1) as f64;
        leg + alpha * (arm + 1.0)
    }

    /// `Σ_cells ln(upper hook)`.
    pub(crate) fn ln_upper_hook_product(&self, alpha: f64) -> f64 {
        let conj = self.conjugate();
        let mut acc = 0.0;
        for (i, &p) in self.parts.iter().enumerate() {
            for j in 0..p {
                acc += self.upper_hook(&conj, i, j, alpha).ln();
            }
        }
        acc
    }

    /// All `μ ⊆ self` such that `self/μ` is a horizontal strip and `μ` has at
    /// most `max_parts` parts.
    pub fn horizontal_strips_below(&self, max_parts: usize) -> Vec<Partition> {
        let len = self.len();
        if len > max_parts + 1 {
            return Vec::new();
        }
        // μ_i ∈ [κ_{i+1}, κ_i] for i < max_parts, μ_i = 0 beyond.
        let rows = len.min(max_parts);
        let mut out = Vec::new();
        let mut current = vec![0usize; rows];
        fn rec(
            kappa: &Partition,
            row: usize,
            rows: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<Partition>,
        ) {
            if row == rows {
                out.push(Partition::from_sorted_unchecked(current.clone()));
                return;
            }
            let hi = kappa.part(row);
            let lo = kappa.part(row + 1);
            for v in (lo..=hi).rev() {
                current[row] = v;
                rec(kappa, row + 1, rows, current, out);
            }
        }
        rec(self, 0, rows, &mut current, &mut out);
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Every partition of `t` with at most `max_parts` parts, in reverse
/// lexicographic order: `(t)` first, then `(t-1, 1)`, and so on down to the
/// partition with the most (smallest) parts.
///
/// `t = 0` yields the single empty partition.
pub fn enumerate_partitions(t: usize, max_parts: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        remaining: usize,
        max_part: usize,
        max_parts: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Partition>,
    ) {
        if remaining == 0 {
            out.push(Partition {
                parts: current.clone(),
            });
            return;
        }
        if current.len() == max_parts {
            return;
        }
        for p in (1..=remaining.min(max_part)).rev() {
            // the rest must fit in the remaining rows
            let rows_left = max_parts - current.len();
            if p * rows_left < remaining {
                break;
            }
            current.push(p);
            rec(remaining - p, p, max_parts, current, out);
            current.pop();
        }
    }
    rec(t, t, max_parts, &mut current, &mut out);
    out
}
