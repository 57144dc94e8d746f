//! Command-line front end: simulate scatterplot data, fit and predict with
//! either mixed-model transformation, and benchmark their scaling.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

use clap::{Parser, Subcommand, ValueEnum};
use mmb_splines::bench::{run_cell, EvalBudget};
use mmb_splines::smoother::{self, PredictMode};
use mmb_splines::{basis, sim, Error as CoreError, Transform};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mmb", version, about = "Penalized B-spline smoothing with REML-selected penalty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Sparse mixed-model transformation, O(m) per likelihood evaluation.
    Mmb,
    /// Dense Currie-Durban baseline, O(m^3) per likelihood evaluation.
    Cd,
}

impl From<Method> for Transform {
    fn from(m: Method) -> Transform {
        match m {
            Method::Mmb => Transform::Mmb,
            Method::Cd => Transform::CurrieDurban,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw (x, y) data from a linear trend plus sine with Gaussian noise.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        xmin: f64,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 0.5)]
        noise_sd: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV with header x,y.
        #[arg(long, default_value = "data.csv")]
        out: PathBuf,
    },
    /// Fit a penalized smooth; writes a JSON summary and a prediction grid.
    Fit {
        /// Input CSV with header x,y.
        #[arg(long)]
        input: PathBuf,
        /// Domain lower edge; defaults to the data minimum.
        #[arg(long)]
        xmin: Option<f64>,
        /// Domain upper edge; defaults to the data maximum.
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long, default_value_t = 100)]
        nseg: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Method::Mmb)]
        method: Method,
        /// Fixed penalty; omit to select it by REML.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// JSON summary destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Prediction CSV with columns x0,yhat,ylin.
        #[arg(long, default_value = "pred.csv")]
        pred_out: PathBuf,
    },
    /// Fit and write only the prediction grid.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        xmin: Option<f64>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long, default_value_t = 100)]
        nseg: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Method::Mmb)]
        method: Method,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        #[arg(long, default_value = "pred.csv")]
        pred_out: PathBuf,
    },
    /// Time the lambda-evaluation loop as the basis grows (h fixed at 0.1).
    Bench {
        /// Ascending basis sizes, e.g. 1000,2000,4000.
        #[arg(long, value_delimiter = ',')]
        m_list: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Mmb, Method::Cd])]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 10.0)]
        n_per_segment: f64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Fixed likelihood evaluations per repeat; omit for a full REML search.
        #[arg(long)]
        evals: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum AppError {
    Usage(String),
    Numeric(String),
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> AppError {
        match e {
            CoreError::NotPositiveDefinite { .. }
            | CoreError::DenseNotPositiveDefinite
            | CoreError::NonpositiveSigma { .. }
            | CoreError::NonFiniteLikelihood { .. }
            | CoreError::CdProblemTooLarge { .. } => AppError::Numeric(e.to_string()),
            other => AppError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> AppError {
        AppError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Simulate {
            n,
            xmin,
            xmax,
            noise_sd,
            seed,
            out,
        } => {
            if !(xmin < xmax) {
                return Err(AppError::Usage(format!(
                    "xmin ({xmin}) must be below xmax ({xmax})"
                )));
            }
            if noise_sd < 0.0 || n == 0 {
                return Err(AppError::Usage("need n >= 1 and noise-sd >= 0".into()));
            }
            let (x, y) = sim::simulate(n, xmin, xmax, noise_sd, seed);
            let mut csv = String::from("x,y\n");
            for (xi, yi) in x.iter().zip(&y) {
                writeln!(csv, "{xi},{yi}").unwrap();
            }
            std::fs::write(&out, csv)?;
            Ok(())
        }
        Command::Fit {
            input,
            xmin,
            xmax,
            nseg,
            degree,
            method,
            lambda,
            grid_step,
            out,
            pred_out,
        } => {
            let (fit, grid, yhat, ylin, summary) = fit_file(
                &input, xmin, xmax, nseg, degree, method, lambda, grid_step,
            )?;
            let _ = fit;
            write_predictions(&pred_out, &grid, &yhat, &ylin)?;
            let text = serde_json::to_string_pretty(&summary).unwrap();
            match out {
                Some(path) => std::fs::write(path, text + "\n")?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Predict {
            input,
            xmin,
            xmax,
            nseg,
            degree,
            method,
            lambda,
            grid_step,
            pred_out,
        } => {
            let (_, grid, yhat, ylin, _) = fit_file(
                &input, xmin, xmax, nseg, degree, method, lambda, grid_step,
            )?;
            write_predictions(&pred_out, &grid, &yhat, &ylin)?;
            Ok(())
        }
        Command::Bench {
            m_list,
            methods,
            n_per_segment,
            repeats,
            evals,
            seed,
            out,
        } => {
            if m_list.is_empty() {
                return Err(AppError::Usage("m-list must not be empty".into()));
            }
            if !m_list.windows(2).all(|w| w[0] < w[1]) {
                return Err(AppError::Usage("m-list must be strictly ascending".into()));
            }
            if repeats == 0 {
                return Err(AppError::Usage("repeats must be at least 1".into()));
            }
            let budget = match evals {
                Some(k) if k == 0 => {
                    return Err(AppError::Usage("evals must be at least 1".into()))
                }
                Some(k) => EvalBudget::Fixed(k),
                None => EvalBudget::FullReml,
            };
            let mut csv = String::from("m,method,seconds,n,evaluations\n");
            for &m in &m_list {
                for &method in &methods {
                    let rec = run_cell(m, method.into(), n_per_segment, repeats, budget, seed)?;
                    writeln!(
                        csv,
                        "{},{},{},{},{}",
                        rec.m,
                        rec.method.as_str(),
                        rec.seconds,
                        rec.n,
                        rec.evaluations
                    )
                    .unwrap();
                }
            }
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_file(
    input: &PathBuf,
    xmin: Option<f64>,
    xmax: Option<f64>,
    nseg: usize,
    degree: usize,
    method: Method,
    lambda: Option<f64>,
    grid_step: f64,
) -> Result<
    (
        smoother::FitResult,
        Vec<f64>,
        Vec<f64>,
        Vec<f64>,
        serde_json::Value,
    ),
    AppError,
> {
    if grid_step <= 0.0 {
        return Err(AppError::Usage("grid-step must be positive".into()));
    }
    if let Some(l) = lambda {
        if !(l > 0.0) {
            return Err(AppError::Usage("lambda must be positive".into()));
        }
    }
    let (x, y) = read_dataset(input)?;
    let x_min = xmin.unwrap_or_else(|| x.iter().cloned().fold(f64::INFINITY, f64::min));
    let x_max = xmax.unwrap_or_else(|| x.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let spec = basis::build_spec(x_min, x_max, nseg, degree)?;
    let fit = smoother::fit(&x, &y, &spec, method.into(), lambda)?;

    let mut grid = Vec::new();
    let steps = ((x_max - x_min) / grid_step + 1e-9).floor() as usize;
    for i in 0..=steps {
        grid.push((x_min + i as f64 * grid_step).min(x_max));
    }
    let yhat = smoother::predict(&fit, &grid, PredictMode::Full)?;
    let ylin = smoother::predict(&fit, &grid, PredictMode::Linear)?;

    let summary = serde_json::json!({
        "schema_version": 1,
        "method": Transform::from(method).as_str(),
        "n": x.len(),
        "nseg": nseg,
        "degree": degree,
        "m": spec.m(),
        "lambda": fit.lambda,
        "lambda_fixed": lambda.is_some(),
        "loglik": fit.loglik,
        "sigma2": fit.sigma2_hat,
        "evaluations": fit.evaluations,
        "converged": fit.converged,
        "timing_seconds": fit.timing_seconds,
        "assembly_seconds": fit.assembly_seconds,
        "grid_step": grid_step,
    });
    Ok((fit, grid, yhat, ylin, summary))
}

fn read_dataset(path: &PathBuf) -> Result<(Vec<f64>, Vec<f64>), AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "x,y" => {}
        _ => {
            return Err(AppError::Usage(format!(
                "{}: line 1: expected header \"x,y\"",
                path.display()
            )))
        }
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let bad = |what: &str| {
            AppError::Usage(format!(
                "{}: line {}: {what}",
                path.display(),
                idx + 1
            ))
        };
        let xs = parts.next().ok_or_else(|| bad("missing x"))?;
        let ys = parts.next().ok_or_else(|| bad("missing y"))?;
        if parts.next().is_some() {
            return Err(bad("too many fields"));
        }
        let xv: f64 = xs.trim().parse().map_err(|_| bad("bad x value"))?;
        let yv: f64 = ys.trim().parse().map_err(|_| bad("bad y value"))?;
        if !xv.is_finite() || !yv.is_finite() {
            return Err(bad("non-finite value"));
        }
        x.push(xv);
        y.push(yv);
    }
    Ok((x, y))
}

fn write_predictions(
    path: &PathBuf,
    grid: &[f64],
    yhat: &[f64],
    ylin: &[f64],
) -> Result<(), AppError> {
    let mut csv = String::from("x0,yhat,ylin\n");
    for i in 0..grid.len() {
        writeln!(csv, "{},{},{}", grid[i], yhat[i], ylin[i]).unwrap();
    }
    std::fs::write(path, csv)?;
    Ok(())
}
