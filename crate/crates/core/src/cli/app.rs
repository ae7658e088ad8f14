use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{shape_to_angles, Dims, PolarShape};
use crate::inference::H0Sigma;
use crate::mc::{
    empirical_vs_analytic, normalization_check, pd_theta2_interval, sample_landmarks, Binning,
    SamplerConfig,
};
use crate::models::{isotropic_shape_density, GeneratorSpec, IsotropicVariant, ModelParams};
use crate::quadrature::QuadratureSpec;
use crate::zonal::SeriesControl;

use super::io::{ingest, write_landmarks, Specimen};
use super::workflow::{run_compare, run_test_mean, Group, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "polar-shape", version, about = "Polar shape densities, model selection and mean-shape tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    /// Largest zonal-series degree.
    #[arg(long, default_value_t = 60)]
    pub max_degree: usize,
    /// Relative size below which a degree term counts as negligible.
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SeriesArgs {
    fn control(&self) -> SeriesControl {
        SeriesControl {
            max_degree: self.max_degree,
            rel_tol: self.rel_tol,
            ..SeriesControl::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// 1-based landmarks to keep, e.g. `1,2,6`.
    #[arg(long, value_delimiter = ',')]
    pub select_landmarks: Option<Vec<usize>>,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "gaussian")]
    pub model: IsotropicVariant,
    /// Mean in reduced coordinates, rows separated by `;`, e.g. `1,0.3;-0.2,0.8`.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: String,
    #[arg(long)]
    pub sigma2: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to one group.
    Fit {
        file: PathBuf,
        #[arg(long, default_value = "gaussian")]
        model: IsotropicVariant,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Fit several models to each group and rank them by BIC*.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Repeatable; all three models by default.
        #[arg(long)]
        model: Vec<IsotropicVariant>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Likelihood-ratio test of equal mean shape between two groups.
    TestMean {
        file1: PathBuf,
        file2: PathBuf,
        /// Common model for both groups; by default each group's best model.
        #[arg(long)]
        model: Option<IsotropicVariant>,
        #[arg(long, default_value = "per-group")]
        h0_sigma: H0Sigma,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Density on an angle grid (N = 3) or at the specimens of a file.
    Density {
        #[command(flatten)]
        model: ModelArgs,
        /// Evaluate at these specimens instead of a grid.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        select_landmarks: Option<Vec<usize>>,
        /// Grid cells per angle.
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Simulate landmark configurations from a model.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a model's normalization and its agreement with simulated data (N = 3).
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[command(flatten)]
        series: SeriesArgs,
    },
}

/// Exit code for an error: 1 usage, 2 data, 3 numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        3
    } else if matches!(e, Error::Unsupported(_)) {
        1
    } else {
        2
    }
}

/// Parses `a,b;c,d` into a matrix with one row per `;`-separated group.
pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("cannot parse matrix '{s}': {e}")))?;
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::invalid(format!("matrix '{s}' has rows of different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

fn generator(variant: IsotropicVariant, dims: Dims) -> Result<GeneratorSpec> {
    match variant {
        IsotropicVariant::Gaussian => Ok(GeneratorSpec::gaussian(dims)),
        v => GeneratorSpec::kotz(v.t() as f64, 0.5, dims),
    }
}

fn model_parts(m: &ModelArgs) -> Result<(DMatrix<f64>, Dims, ModelParams)> {
    let mu = parse_matrix(&m.mu)?;
    let dims = Dims::new(mu.nrows() + 1, mu.ncols())?;
    let params = ModelParams::isotropic(mu.clone(), m.sigma2)?;
    Ok((mu, dims, params))
}

fn load_group(path: &Path, select: Option<&[usize]>) -> Result<Group> {
    Ok(Group {
        name: path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
        specimens: ingest(path, select)?,
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command, writing human-readable output to `out`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Fit {
            file,
            model,
            data,
            series,
        } => report_command(&[file], &[model], None, "fit", &data, &series, out),
        Command::Compare {
            files,
            model,
            data,
            series,
        } => {
            let models = if model.is_empty() {
                IsotropicVariant::ALL.to_vec()
            } else {
                model
            };
            report_command(&files, &models, None, "compare", &data, &series, out)
        }
        Command::TestMean {
            file1,
            file2,
            model,
            h0_sigma,
            data,
            series,
        } => {
            let sel = data.select_landmarks.as_deref();
            let g1 = load_group(&file1, sel)?;
            let g2 = load_group(&file2, sel)?;
            let cfg = RunConfig {
                ctl: series.control(),
                seed: series.seed,
                h0_sigma,
            };
            let report = run_test_mean(&g1, &g2, model, &cfg)?;
            finish_report(report, &data, out)
        }
        Command::Density {
            model,
            file,
            select_landmarks,
            grid,
            output,
            series,
        } => {
            let (mu, dims, _) = model_parts(&model)?;
            let ctl = series.control();
            let f = |s: &PolarShape| isotropic_shape_density(s, &mu, model.sigma2, model.model, &ctl);
            let mut text = String::new();
            if let Some(path) = file {
                let specimens: Vec<Specimen> = ingest(&path, select_landmarks.as_deref())?;
                text.push_str("specimen,density\n");
                for s in &specimens {
                    if s.landmarks.dims() != dims {
                        return Err(Error::Data(format!(
                            "specimen '{}' does not match the model dimensions",
                            s.id
                        )));
                    }
                    let (shape, _) = crate::geometry::shape_from_landmarks(&s.landmarks, None)?;
                    text.push_str(&format!("{},{:e}\n", s.id, f(&shape)?));
                }
            } else {
                if dims.landmarks != 3 || grid == 0 {
                    return Err(Error::Unsupported(
                        "grid output needs N = 3 and a positive grid size".into(),
                    ));
                }
                text.push_str("theta1,theta2,density\n");
                let h1 = std::f64::consts::FRAC_PI_2 / grid as f64;
                let h2 = std::f64::consts::PI / grid as f64;
                for i in 0..grid {
                    let t1 = (i as f64 + 0.5) * h1;
                    for j in 0..grid {
                        let t2 = (j as f64 + 0.5) * h2;
                        let inside = pd_theta2_interval(t1).is_some_and(|(lo, hi)| t2 > lo && t2 < hi);
                        let v = if inside {
                            PolarShape::from_angles(&[t1, t2]).map_or(Ok(0.0), |s| f(&s))?
                        } else {
                            0.0
                        };
                        text.push_str(&format!("{t1:.6},{t2:.6},{v:e}\n"));
                    }
                }
            }
            emit(out, output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Sample {
            model,
            n,
            output,
            seed,
        } => {
            let (_, dims, params) = model_parts(&model)?;
            let cfg = SamplerConfig {
                spec: generator(model.model, dims)?,
                params,
                n,
                seed,
            };
            let specimens: Vec<Specimen> = sample_landmarks(&cfg)?
                .into_iter()
                .enumerate()
                .map(|(i, landmarks)| Specimen {
                    id: format!("s{}", i + 1),
                    landmarks,
                })
                .collect();
            let mut buf = Vec::new();
            write_landmarks(&mut buf, &specimens)?;
            emit(out, output.as_deref(), &String::from_utf8_lossy(&buf))?;
            Ok(0)
        }
        Command::Validate {
            model,
            samples,
            series,
        } => {
            let (mu, dims, params) = model_parts(&model)?;
            if dims.landmarks != 3 {
                return Err(Error::Unsupported("validation is implemented for N = 3".into()));
            }
            let ctl = series.control();
            let f = |s: &PolarShape| isotropic_shape_density(s, &mu, model.sigma2, model.model, &ctl);
            let quad = QuadratureSpec {
                rel_tol: 1e-7,
                abs_tol: 1e-12,
                ..QuadratureSpec::default()
            };
            let integral = normalization_check(&f, dims, &quad)?;
            let cfg = SamplerConfig {
                spec: generator(model.model, dims)?,
                params,
                n: samples,
                seed: series.seed,
            };
            let angles = sample_landmarks(&cfg)?
                .iter()
                .map(|x| {
                    let (s, _) = crate::geometry::shape_from_landmarks(x, None)?;
                    shape_to_angles(&s.w)
                })
                .collect::<Result<Vec<_>>>()?;
            let gof = empirical_vs_analytic(&angles, &f, &Binning::default(), &quad)?;
            writeln!(out, "model {}  mu {}  sigma2 {}", model.model, model.mu, model.sigma2)?;
            writeln!(out, "normalization integral {integral:.6}")?;
            writeln!(
                out,
                "goodness of fit: chi2 = {:.4}, df = {}, p = {:.4} ({} samples)",
                gof.statistic, gof.df, gof.p_value, gof.samples
            )?;
            let ok = (integral - 1.0).abs() <= 0.01 && gof.p_value > 0.01;
            writeln!(out, "{}", if ok { "PASS" } else { "FAIL" })?;
            Ok(if ok { 0 } else { 3 })
        }
    }
}

fn report_command(
    files: &[PathBuf],
    models: &[IsotropicVariant],
    h0: Option<H0Sigma>,
    command: &str,
    data: &DataArgs,
    series: &SeriesArgs,
    out: &mut dyn Write,
) -> Result<i32> {
    let sel = data.select_landmarks.as_deref();
    let groups = files
        .iter()
        .map(|f| load_group(f, sel))
        .collect::<Result<Vec<_>>>()?;
    let cfg = RunConfig {
        ctl: series.control(),
        seed: series.seed,
        h0_sigma: h0.unwrap_or_default(),
    };
    let mut report = run_compare(&groups, models, &cfg)?;
    report.command = command.to_string();
    finish_report(report, data, out)
}

fn finish_report(report: super::report::RunReport, data: &DataArgs, out: &mut dyn Write) -> Result<i32> {
    out.write_all(report.to_text().as_bytes())?;
    if let Some(path) = &data.json {
        fs::write(path, report.to_json()?)?;
    }
    Ok(if report.failed_fits() > 0 { 3 } else { 0 })
}

/// Parses `args` and runs the command; usage errors print clap's message.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("polar-shape: {e}");
            exit_code(&e)
        }
    }
}
