//! Run reports: a text table for people and a JSON sidecar for programs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{EvidenceGrade, FitResult, LrtResult};
use crate::models::IsotropicVariant;
use crate::zonal::SeriesControl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEcho {
    pub max_degree: usize,
    pub rel_tol: f64,
    pub consecutive_small: usize,
}

impl From<&SeriesControl> for SeriesEcho {
    fn from(c: &SeriesControl) -> Self {
        SeriesEcho {
            max_degree: c.max_degree,
            rel_tol: c.rel_tol,
            consecutive_small: c.consecutive_small,
        }
    }
}

impl From<&SeriesEcho> for SeriesControl {
    fn from(e: &SeriesEcho) -> Self {
        SeriesControl {
            max_degree: e.max_degree,
            rel_tol: e.rel_tol,
            consecutive_small: e.consecutive_small,
        }
    }
}

/// One (group, model) fit; exactly one of `fit` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub model: IsotropicVariant,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

/// Pairwise BIC* comparison; `delta_bic_star = BIC*(worse) − BIC*(better) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub better: IsotropicVariant,
    pub worse: IsotropicVariant,
    pub delta_bic_star: f64,
    pub grade: EvidenceGrade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub n: usize,
    pub landmarks: usize,
    pub coords: usize,
    /// Indices of rank-deficient configurations.
    pub degenerate: Vec<usize>,
    pub fits: Vec<FitEntry>,
    /// `delta_bic_star[i][j] = BIC*(fits[j]) − BIC*(fits[i])`; `None` when
    /// either fit failed.
    pub delta_bic_star: Vec<Vec<Option<f64>>>,
    pub comparisons: Vec<Comparison>,
    /// Model with the lowest BIC*.
    pub best: Option<IsotropicVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtBlock {
    pub groups: [String; 2],
    pub result: LrtResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub series_control: SeriesEcho,
    pub groups: Vec<GroupReport>,
    pub lrt: Option<LrtBlock>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn failed_fits(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| &g.fits)
            .filter(|f| f.fit.is_none())
            .count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.series_control;
        let _ = writeln!(
            s,
            "polar-shape {}  {}  seed {}  max_degree {}  rel_tol {:e}",
            self.tool_version, self.command, self.seed, c.max_degree, c.rel_tol
        );
        for g in &self.groups {
            let _ = writeln!(
                s,
                "\ngroup {} (n = {}, N = {}, K = {})",
                g.name, g.n, g.landmarks, g.coords
            );
            if !g.degenerate.is_empty() {
                let _ = writeln!(s, "  rank-deficient specimens: {:?}", g.degenerate);
            }
            let _ = writeln!(
                s,
                "  {:<9} {:>12} {:>12} {:>12} {:>4} {:>5}  mu_hat",
                "model", "loglik", "sigma2", "BIC*", "n_p", "conv"
            );
            for f in &g.fits {
                match (&f.fit, &f.error) {
                    (Some(r), _) => {
                        let mu: Vec<String> = r
                            .mu_hat
                            .iter()
                            .map(|row| {
                                let v: Vec<String> = row.iter().map(|x| format!("{x:.5}")).collect();
                                format!("[{}]", v.join(", "))
                            })
                            .collect();
                        let best = if g.best == Some(f.model) { "  *" } else { "" };
                        let _ = writeln!(
                            s,
                            "  {:<9} {:>12.4} {:>12.6} {:>12.4} {:>4} {:>5}  [{}]{}",
                            f.model.to_string(),
                            r.loglik,
                            r.sigma2_hat,
                            r.bic_star,
                            r.n_p,
                            if r.converged { "yes" } else { "no" },
                            mu.join(", "),
                            best
                        );
                    }
                    (None, e) => {
                        let _ = writeln!(
                            s,
                            "  {:<9} failed: {}",
                            f.model.to_string(),
                            e.as_deref().unwrap_or("unknown error")
                        );
                    }
                }
            }
            if let Some(b) = g.best {
                let _ = writeln!(s, "  best (lowest BIC*): {b}");
            }
            for cmp in &g.comparisons {
                let _ = writeln!(
                    s,
                    "  {} over {}: dBIC* = {:.4} ({})",
                    cmp.better, cmp.worse, cmp.delta_bic_star, cmp.grade
                );
            }
        }
        if let Some(l) = &self.lrt {
            let r = &l.result;
            let _ = writeln!(
                s,
                "\nLRT of equal mean shape, {} ({}) vs {} ({}), H0 sigma {}",
                l.groups[0], r.variants[0], l.groups[1], r.variants[1], r.h0_sigma
            );
            let _ = writeln!(
                s,
                "  -2 log L = {:.6}  df = {}  p = {:.6}",
                r.stat, r.df, r.p_value
            );
            let _ = writeln!(
                s,
                "  identifiable df = {}  p = {:.6}",
                r.df_identifiable, r.p_value_identifiable
            );
            let _ = writeln!(
                s,
                "  loglik H0 = {:.6}  loglik Ha = {:.6}",
                r.loglik_h0, r.loglik_ha
            );
        }
        s
    }
}
