//! The compare and test-mean workflows behind the subcommands.

use crate::error::{Error, Result};
use crate::geometry::LandmarkMatrix;
use crate::inference::{
    evidence_grade, fit_mle, lrt_equal_mean_with, Dataset, FitOptions, H0Sigma,
};
use crate::models::IsotropicVariant;
use crate::zonal::SeriesControl;

use super::io::Specimen;
use super::report::{Comparison, FitEntry, GroupReport, LrtBlock, RunReport, SeriesEcho};

/// A named group of specimens, usually one input file.
#[derive(Debug, Clone)]
pub struct Group {
    pub name: String,
    pub specimens: Vec<Specimen>,
}

impl Group {
    pub fn dataset(&self) -> Result<Dataset> {
        let configs: Vec<LandmarkMatrix> =
            self.specimens.iter().map(|s| s.landmarks.clone()).collect();
        Dataset::from_landmarks(&configs, None).map_err(|e| match e {
            Error::Specimen { index, source } => Error::Data(format!(
                "group {}, specimen '{}': {source}",
                self.name, self.specimens[index].id
            )),
            e => e,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub ctl: SeriesControl,
    pub seed: u64,
    pub h0_sigma: H0Sigma,
}

impl RunConfig {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed,
            ..FitOptions::default()
        }
    }
}

/// The group's report and the first fit error, if any.
fn group_report(
    group: &Group,
    models: &[IsotropicVariant],
    cfg: &RunConfig,
) -> Result<(GroupReport, Option<Error>)> {
    let data = group.dataset()?;
    let opts = cfg.fit_options();
    let mut first_error = None;
    let fits: Vec<FitEntry> = models
        .iter()
        .map(|&model| match fit_mle(&data, model, None, &cfg.ctl, &opts) {
            Ok(r) => FitEntry {
                model,
                fit: Some(r),
                error: None,
            },
            Err(e) => {
                let entry = FitEntry {
                    model,
                    fit: None,
                    error: Some(e.to_string()),
                };
                first_error.get_or_insert(e);
                entry
            }
        })
        .collect();

    let bic: Vec<Option<f64>> = fits.iter().map(|f| f.fit.as_ref().map(|r| r.bic_star)).collect();
    let delta_bic_star = bic
        .iter()
        .map(|bi| bic.iter().map(|bj| Some((*bj)? - (*bi)?)).collect())
        .collect();
    let mut comparisons = Vec::new();
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            if let (Some(bi), Some(bj)) = (bic[i], bic[j]) {
                let (better, worse) = if bi <= bj { (i, j) } else { (j, i) };
                let delta = (bj - bi).abs();
                comparisons.push(Comparison {
                    better: fits[better].model,
                    worse: fits[worse].model,
                    delta_bic_star: delta,
                    grade: evidence_grade(delta),
                });
            }
        }
    }
    let best = bic
        .iter()
        .zip(&fits)
        .filter_map(|(b, f)| b.map(|b| (b, f.model)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, m)| m);
    let report = GroupReport {
        name: group.name.clone(),
        n: data.len(),
        landmarks: data.dims.landmarks,
        coords: data.dims.coords,
        degenerate: data.degenerate.clone(),
        fits,
        delta_bic_star,
        comparisons,
        best,
    };
    Ok((report, first_error))
}

fn base_report(command: &str, cfg: &RunConfig) -> RunReport {
    RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed: cfg.seed,
        series_control: SeriesEcho::from(&cfg.ctl),
        groups: Vec::new(),
        lrt: None,
    }
}

/// Fits every model to every group and ranks the models by BIC* within
/// each group. Failed fits are recorded in the report.
pub fn run_compare(groups: &[Group], models: &[IsotropicVariant], cfg: &RunConfig) -> Result<RunReport> {
    if groups.is_empty() || models.is_empty() {
        return Err(Error::invalid("compare needs at least one group and one model"));
    }
    cfg.ctl.validate()?;
    let mut report = base_report("compare", cfg);
    for g in groups {
        report.groups.push(group_report(g, models, cfg)?.0);
    }
    Ok(report)
}

/// Likelihood-ratio test of equal mean shape. With `model = None` each
/// group uses its own lowest-BIC* model among all variants; otherwise both
/// groups use `model`.
pub fn run_test_mean(
    group1: &Group,
    group2: &Group,
    model: Option<IsotropicVariant>,
    cfg: &RunConfig,
) -> Result<RunReport> {
    cfg.ctl.validate()?;
    let models: Vec<IsotropicVariant> = match model {
        Some(m) => vec![m],
        None => IsotropicVariant::ALL.to_vec(),
    };
    let mut report = base_report("test-mean", cfg);
    let (r1, e1) = group_report(group1, &models, cfg)?;
    let (r2, e2) = group_report(group2, &models, cfg)?;
    let pick = |r: &GroupReport, e: Option<Error>| match (r.best, e) {
        (Some(best), _) => Ok(best),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::Data(format!("no model fitted to group {}", r.name))),
    };
    let variants = [pick(&r1, e1)?, pick(&r2, e2)?];
    let result = lrt_equal_mean_with(
        &group1.dataset()?,
        &group2.dataset()?,
        variants,
        cfg.h0_sigma,
        &cfg.ctl,
        &cfg.fit_options(),
    )?;
    report.groups = vec![r1, r2];
    report.lrt = Some(LrtBlock {
        groups: [group1.name.clone(), group2.name.clone()],
        result,
    });
    Ok(report)
}
